#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "mskrt/model.hpp"
#include "mskrt/telemetry.hpp"

namespace mskrt {

/// min |a|^2 + w |r|^2  s.t.  R diag(f_max) a + r = tau,  0 <= a <= 1.
struct SoProblem {
    Eigen::MatrixXd moment_arms;  // coordinates x muscles, m
    Eigen::VectorXd f_max;        // N
    Eigen::VectorXd tau;          // N m
    double residual_weight = 1e3;

    /// Throws DimensionError / Error on inconsistent shapes or weight <= 0.
    void validate() const;
    Eigen::MatrixXd torque_map() const;  // R diag(f_max)
};

SoProblem make_problem(const ChainModel& model, const Eigen::Ref<const Eigen::VectorXd>& q,
                       const Eigen::Ref<const Eigen::VectorXd>& tau, double residual_weight = 1e3);

struct SoOptions {
    double kkt_tolerance = 1e-8;
    int max_iterations = 500;
};

struct ActivationResult {
    std::size_t index = 0;  // message sequence number
    double t = 0.0;
    Eigen::VectorXd a;
    Eigen::VectorXd residuals;  // N m
    bool converged = false;
    std::size_t worker = 0;
    int iterations = 0;
    double kkt = 0.0;
    EventLog events;
};

/// Primal active-set solve on the activation box. The residual is eliminated:
/// on the free set F the optimum is a_F = A_F^T l with
/// (I / w + A_F A_F^T) l = tau - A_W a_W, and r = l / w. If that misses the
/// KKT tolerance, the final free set is re-solved in the equivalent primal
/// form and the more accurate of the two is kept.
ActivationResult solve_activation(const SoProblem& p, const Eigen::VectorXd& warm,
                                  const SoOptions& options = {});
/// Same, appending events 8 and 9 from `clock` to `events`.
ActivationResult solve_activation(const SoProblem& p, const Eigen::VectorXd& warm,
                                  EventLog events, const Clock& clock,
                                  const SoOptions& options = {});

/// Largest KKT violation of (a, r): stationarity of the Lagrangian in a
/// (sign-aware at the bounds), in r, and equality feasibility.
double kkt_residual(const SoProblem& p, const Eigen::VectorXd& a, const Eigen::VectorXd& r);

/// Worker for a message: index mod n_workers.
std::size_t dispatch(std::size_t index, std::size_t n_workers);

/// Restores message order after parallel workers. Messages are announced in
/// index order with their stamp and event-0 time; the head blocks emission
/// until its result arrives or its deadline passes. Results for skipped
/// messages, results older than the last emitted stamp, and results whose
/// event 0 -> 9 latency exceeds the deadline are discarded.
class Sequencer {
public:
    explicit Sequencer(double deadline_s = 0.5);

    struct Output {
        std::vector<ActivationResult> emitted;
        std::vector<ActivationResult> discarded;
    };

    void expect(std::size_t index, double t, double t0);
    Output on_result(ActivationResult result, double now);
    /// Skips heads whose deadline passed at `now`, releasing what follows.
    Output advance(double now);
    /// Next instant at which advance() could skip the head.
    std::optional<double> next_deadline() const;

    std::size_t received() const { return received_; }
    std::size_t emitted() const { return emitted_; }
    std::size_t discarded() const { return discarded_; }
    std::size_t skipped() const { return skipped_.size(); }
    std::size_t pending() const { return expected_.size(); }
    double deadline() const { return deadline_; }

private:
    struct Expected {
        std::size_t index;
        double t;
        double t0;
    };
    void drain(Output& out);
    void discard(ActivationResult r, Output& out);

    double deadline_;
    std::deque<Expected> expected_;
    std::map<std::size_t, ActivationResult> waiting_;
    std::set<std::size_t> skipped_;
    std::optional<double> last_t_;
    std::size_t received_ = 0;
    std::size_t emitted_ = 0;
    std::size_t discarded_ = 0;
};

struct SoJob {
    std::size_t index = 0;
    double t = 0.0;
    SoProblem problem;
    EventLog events;  // must already hold event 0
};

/// Extra solver time injected per message index, s.
using DelayInjector = std::function<double(std::size_t index)>;

struct SoEngineConfig {
    std::size_t workers = 12;
    double deadline_s = 0.5;
    SoOptions options;
    DelayInjector extra_delay;
    /// Logical mode only: virtual duration of one solve, s.
    double virtual_cost_s = 0.025;
};

/// Sink for sequenced output; `discarded` tells which list a result is from.
using ResultSink = std::function<void(const ActivationResult& result, bool discarded)>;

/// Deterministic discrete-event model of the worker pool on virtual time.
/// Each worker is busy until its previous solve finishes; a solve takes
/// virtual_cost_s plus the injected delay.
class LogicalSoEngine {
public:
    LogicalSoEngine(SoEngineConfig config, ResultSink sink);

    /// Stamps event 7 at `now`; completions due at or before `now` are
    /// processed first.
    void submit(SoJob job, double now);
    void advance(double now);
    void finish();

    const std::vector<std::size_t>& assignments() const { return assignments_; }
    const Sequencer& sequencer() const { return sequencer_; }

private:
    struct Completion {
        double at;
        std::size_t index;
        bool operator>(const Completion& o) const {
            return at != o.at ? at > o.at : index > o.index;
        }
    };
    void deliver(Sequencer::Output out);

    SoEngineConfig config_;
    ResultSink sink_;
    Sequencer sequencer_;
    VirtualClock clock_;
    std::vector<double> busy_until_;
    std::vector<Eigen::VectorXd> warm_;
    std::vector<std::size_t> assignments_;
    std::priority_queue<Completion, std::vector<Completion>, std::greater<>> completions_;
    std::map<std::size_t, ActivationResult> finished_;
};

/// The same pipeline stage on real threads: one thread per worker with its
/// own queue and warm start, plus a sequencer thread that enforces order and
/// deadlines on the steady clock.
class ThreadedSoEngine {
public:
    ThreadedSoEngine(SoEngineConfig config, const SteadyClock& clock, ResultSink sink);
    ~ThreadedSoEngine();
    ThreadedSoEngine(const ThreadedSoEngine&) = delete;
    ThreadedSoEngine& operator=(const ThreadedSoEngine&) = delete;

    void submit(SoJob job);
    /// Waits for every submitted job to be solved and sequenced, then joins.
    void finish();

    std::vector<std::size_t> assignments() const;
    std::size_t received() const;
    std::size_t emitted() const;
    std::size_t discarded() const;

private:
    struct Worker {
        std::deque<SoJob> queue;
        Eigen::VectorXd warm;
        std::condition_variable cv;
        std::thread thread;
    };
    void worker_loop(std::size_t id);
    void sequencer_loop();

    SoEngineConfig config_;
    const SteadyClock& clock_;
    ResultSink sink_;

    mutable std::mutex mutex_;
    std::vector<std::unique_ptr<Worker>> workers_;
    bool stopping_ = false;
    std::vector<std::size_t> assignments_;

    std::condition_variable seq_cv_;
    std::deque<ActivationResult> results_;
    Sequencer sequencer_;
    std::size_t outstanding_ = 0;
    bool seq_stop_ = false;
    std::thread seq_thread_;
    bool finished_ = false;
};

} // namespace mskrt
