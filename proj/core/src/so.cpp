#include "mskrt/so.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "mskrt/errors.hpp"

namespace mskrt {

void SoProblem::validate() const {
    if (moment_arms.cols() != f_max.size()) {
        throw DimensionError("SO problem: moment-arm columns differ from muscle count");
    }
    if (moment_arms.rows() != tau.size()) {
        throw DimensionError("SO problem: moment-arm rows differ from torque length");
    }
    if (!(residual_weight > 0.0) || !std::isfinite(residual_weight)) {
        throw Error("SO problem: residual weight must be positive");
    }
    if (!tau.allFinite() || !moment_arms.allFinite() || !f_max.allFinite()) {
        throw Error("SO problem: non-finite input");
    }
}

Eigen::MatrixXd SoProblem::torque_map() const {
    return moment_arms * f_max.asDiagonal();
}

SoProblem make_problem(const ChainModel& model, const Eigen::Ref<const Eigen::VectorXd>& q,
                       const Eigen::Ref<const Eigen::VectorXd>& tau, double residual_weight) {
    SoProblem p;
    p.moment_arms = moment_arms(model, q);
    p.f_max.resize(static_cast<Eigen::Index>(model.muscle_count()));
    for (std::size_t i = 0; i < model.muscle_count(); ++i) {
        p.f_max[static_cast<Eigen::Index>(i)] = model.muscles()[i].f_max;
    }
    p.tau = tau;
    p.residual_weight = residual_weight;
    p.validate();
    return p;
}

double kkt_residual(const SoProblem& p, const Eigen::VectorXd& a, const Eigen::VectorXd& r) {
    const Eigen::MatrixXd A = p.torque_map();
    const double w = p.residual_weight;
    // Lagrangian |a|^2 + w|r|^2 - 2 l^T (A a + r - tau); stationarity in r gives l = w r.
    const Eigen::VectorXd lambda = w * r;
    const Eigen::VectorXd grad = 2.0 * (a - A.transpose() * lambda);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        double v = 0.0;
        if (a[i] <= 0.0) {
            v = std::max(0.0, -grad[i]);
        } else if (a[i] >= 1.0) {
            v = std::max(0.0, grad[i]);
        } else {
            v = std::abs(grad[i]);
        }
        worst = std::max(worst, v);
    }
    const Eigen::VectorXd feas = A * a + r - p.tau;
    return std::max(worst, feas.cwiseAbs().maxCoeff());
}

namespace {

enum class Bound : signed char { free = 0, lower = -1, upper = 1 };

struct Subproblem {
    Eigen::VectorXd a_free;  // optimum on the free set, packed
    Eigen::VectorXd lambda;
};

Eigen::MatrixXd free_columns(const Eigen::MatrixXd& A, const std::vector<Eigen::Index>& free) {
    Eigen::MatrixXd af(A.rows(), static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) {
        af.col(static_cast<Eigen::Index>(k)) = A.col(free[k]);
    }
    return af;
}

Eigen::VectorXd bound_rhs(const Eigen::MatrixXd& A, const Eigen::VectorXd& tau, const Eigen::VectorXd& a,
                          const std::vector<Bound>& state) {
    Eigen::VectorXd rhs = tau;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (state[static_cast<std::size_t>(i)] != Bound::free) {
            rhs -= A.col(i) * a[i];
        }
    }
    return rhs;
}

// Dual form: (I / w + A_F A_F^T) l = b, a_F = A_F^T l.
Subproblem solve_free(const Eigen::MatrixXd& A, const Eigen::VectorXd& tau, double w,
                      const Eigen::VectorXd& a, const std::vector<Bound>& state,
                      const std::vector<Eigen::Index>& free) {
    const Eigen::VectorXd rhs = bound_rhs(A, tau, a, state);
    const Eigen::MatrixXd af = free_columns(A, free);
    Eigen::MatrixXd m = af * af.transpose();
    m.diagonal().array() += 1.0 / w;
    Subproblem s;
    s.lambda = m.ldlt().solve(rhs);
    s.a_free = af.transpose() * s.lambda;
    return s;
}

// Primal form (I + w A_F^T A_F) a_F = w A_F^T b with one refinement step.
// More accurate than the dual form when the residual torque is large.
Subproblem solve_free_primal(const Eigen::MatrixXd& A, const Eigen::VectorXd& tau, double w,
                             const Eigen::VectorXd& a, const std::vector<Bound>& state,
                             const std::vector<Eigen::Index>& free) {
    const Eigen::VectorXd rhs = bound_rhs(A, tau, a, state);
    const Eigen::MatrixXd af = free_columns(A, free);
    Eigen::MatrixXd h = w * af.transpose() * af;
    h.diagonal().array() += 1.0;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Subproblem s;
    s.a_free = ldlt.solve(w * (af.transpose() * rhs));
    const Eigen::VectorXd g = s.a_free - af.transpose() * (w * (rhs - af * s.a_free));
    s.a_free -= ldlt.solve(g);
    s.lambda = w * (rhs - af * s.a_free);
    return s;
}

} // namespace

ActivationResult solve_activation(const SoProblem& p, const Eigen::VectorXd& warm,
                                  const SoOptions& options) {
    p.validate();
    const Eigen::Index n = p.f_max.size();
    if (warm.size() != n) {
        throw DimensionError("SO warm start length differs from muscle count");
    }
    const Eigen::MatrixXd A = p.torque_map();
    const double w = p.residual_weight;

    Eigen::VectorXd a = warm.unaryExpr([](double v) {
        return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    });
    std::vector<Bound> state(static_cast<std::size_t>(n), Bound::free);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a[i] <= 0.0) state[static_cast<std::size_t>(i)] = Bound::lower;
        if (a[i] >= 1.0) state[static_cast<std::size_t>(i)] = Bound::upper;
    }

    ActivationResult res;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(p.tau.size());
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (state[static_cast<std::size_t>(i)] == Bound::free) free.push_back(i);
        }
        const Subproblem sub = solve_free(A, p.tau, w, a, state, free);
        lambda = sub.lambda;

        // Largest feasible step toward the free-set optimum.
        double alpha = 1.0;
        std::optional<std::size_t> blocking;
        for (std::size_t k = 0; k < free.size(); ++k) {
            const Eigen::Index i = free[k];
            const double target = sub.a_free[static_cast<Eigen::Index>(k)];
            const double d = target - a[i];
            if (target < 0.0 && d < 0.0) {
                const double ratio = a[i] / -d;
                if (ratio < alpha) {
                    alpha = ratio;
                    blocking = k;
                }
            } else if (target > 1.0 && d > 0.0) {
                const double ratio = (1.0 - a[i]) / d;
                if (ratio < alpha) {
                    alpha = ratio;
                    blocking = k;
                }
            }
        }
        for (std::size_t k = 0; k < free.size(); ++k) {
            const Eigen::Index i = free[k];
            a[i] += alpha * (sub.a_free[static_cast<Eigen::Index>(k)] - a[i]);
        }
        if (blocking) {
            const Eigen::Index i = free[*blocking];
            const bool low = sub.a_free[static_cast<Eigen::Index>(*blocking)] < 0.0;
            a[i] = low ? 0.0 : 1.0;
            state[static_cast<std::size_t>(i)] = low ? Bound::lower : Bound::upper;
            continue;
        }

        // At the free-set optimum: release the bound with the worst multiplier.
        const Eigen::VectorXd grad = 2.0 * (a - A.transpose() * lambda);
        double worst = options.kkt_tolerance;
        std::optional<Eigen::Index> release;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Bound b = state[static_cast<std::size_t>(i)];
            const double v = b == Bound::lower ? -grad[i] : b == Bound::upper ? grad[i] : 0.0;
            if (v > worst) {
                worst = v;
                release = i;
            }
        }
        if (!release) {
            break;
        }
        state[static_cast<std::size_t>(*release)] = Bound::free;
    }

    res.a = a;
    res.residuals = lambda / w;
    res.iterations = iter;
    res.kkt = kkt_residual(p, res.a, res.residuals);
    if (iter < options.max_iterations && !(res.kkt < options.kkt_tolerance)) {
        // Same active set, other factorization; keep whichever is more accurate.
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (state[static_cast<std::size_t>(i)] == Bound::free) free.push_back(i);
        }
        const Subproblem alt = solve_free_primal(A, p.tau, w, a, state, free);
        Eigen::VectorXd a_alt = a;
        for (std::size_t k = 0; k < free.size(); ++k) {
            a_alt[free[k]] = std::clamp(alt.a_free[static_cast<Eigen::Index>(k)], 0.0, 1.0);
        }
        const Eigen::VectorXd r_alt = alt.lambda / w;
        const double kkt_alt = kkt_residual(p, a_alt, r_alt);
        if (kkt_alt < res.kkt) {
            res.a = a_alt;
            res.residuals = r_alt;
            res.kkt = kkt_alt;
        }
    }
    res.converged = iter < options.max_iterations && res.kkt < options.kkt_tolerance;
    return res;
}

ActivationResult solve_activation(const SoProblem& p, const Eigen::VectorXd& warm,
                                  EventLog events, const Clock& clock, const SoOptions& options) {
    events = record_event(std::move(events), EventId::before_so, clock.now());
    ActivationResult res = solve_activation(p, warm, options);
    res.events = record_event(std::move(events), EventId::activations_calculated, clock.now());
    return res;
}

std::size_t dispatch(std::size_t index, std::size_t n_workers) {
    if (n_workers == 0) {
        throw Error("dispatch: worker count must be at least 1");
    }
    return index % n_workers;
}

// --- Sequencer -------------------------------------------------------------

Sequencer::Sequencer(double deadline_s) : deadline_(deadline_s) {
    if (!(deadline_ > 0.0)) {
        throw Error("sequencer deadline must be positive");
    }
}

void Sequencer::expect(std::size_t index, double t, double t0) {
    if (!expected_.empty() && index <= expected_.back().index) {
        throw Error("sequencer: messages must be announced in increasing index order");
    }
    expected_.push_back({index, t, t0});
}

void Sequencer::discard(ActivationResult r, Output& out) {
    ++discarded_;
    out.discarded.push_back(std::move(r));
}

void Sequencer::drain(Output& out) {
    while (!expected_.empty()) {
        auto it = waiting_.find(expected_.front().index);
        if (it == waiting_.end()) {
            return;
        }
        ActivationResult r = std::move(it->second);
        waiting_.erase(it);
        expected_.pop_front();
        const auto total = total_latency(r.events);
        const bool late = !total || *total > deadline_;
        const bool stale = last_t_ && r.t <= *last_t_;
        if (late || stale) {
            discard(std::move(r), out);
            continue;
        }
        last_t_ = r.t;
        ++emitted_;
        out.emitted.push_back(std::move(r));
    }
}

Sequencer::Output Sequencer::advance(double now) {
    Output out;
    drain(out);
    while (!expected_.empty() && now > expected_.front().t0 + deadline_) {
        skipped_.insert(expected_.front().index);
        expected_.pop_front();
        drain(out);
    }
    return out;
}

Sequencer::Output Sequencer::on_result(ActivationResult result, double now) {
    ++received_;
    Output out = advance(now);
    const bool known = std::any_of(expected_.begin(), expected_.end(), [&](const Expected& e) {
        return e.index == result.index;
    });
    if (!known || skipped_.contains(result.index) || waiting_.contains(result.index)) {
        discard(std::move(result), out);
        return out;
    }
    waiting_.emplace(result.index, std::move(result));
    drain(out);
    return out;
}

std::optional<double> Sequencer::next_deadline() const {
    if (expected_.empty()) {
        return std::nullopt;
    }
    return expected_.front().t0 + deadline_;
}

// --- Logical engine ----------------------------------------------------------

LogicalSoEngine::LogicalSoEngine(SoEngineConfig config, ResultSink sink)
    : config_(std::move(config)), sink_(std::move(sink)), sequencer_(config_.deadline_s) {
    if (config_.workers == 0) {
        throw Error("SO engine needs at least one worker");
    }
    if (!(config_.virtual_cost_s >= 0.0)) {
        throw Error("SO virtual cost must be non-negative");
    }
    busy_until_.assign(config_.workers, -std::numeric_limits<double>::infinity());
}

void LogicalSoEngine::deliver(Sequencer::Output out) {
    if (!sink_) {
        return;
    }
    for (const auto& r : out.emitted) sink_(r, false);
    for (const auto& r : out.discarded) sink_(r, true);
}

void LogicalSoEngine::advance(double now) {
    while (!completions_.empty() && completions_.top().at <= now) {
        const Completion c = completions_.top();
        completions_.pop();
        clock_.set(c.at);
        auto node = finished_.extract(c.index);
        deliver(sequencer_.on_result(std::move(node.mapped()), c.at));
    }
    clock_.set(now);
    deliver(sequencer_.advance(now));
}

void LogicalSoEngine::submit(SoJob job, double now) {
    advance(now);
    const std::size_t worker = dispatch(job.index, config_.workers);
    assignments_.push_back(worker);
    const auto t0 = job.events.time_of(EventId::joint_angles_produced);
    if (!t0) {
        throw Error("SO job without event 0");
    }
    sequencer_.expect(job.index, job.t, *t0);

    EventLog events = record_event(std::move(job.events), EventId::so_received, now);
    const double start = std::max(now, busy_until_[worker]);
    const double extra = config_.extra_delay ? config_.extra_delay(job.index) : 0.0;
    const double end = start + config_.virtual_cost_s + extra;
    busy_until_[worker] = end;

    if (warm_.size() <= worker) {
        warm_.resize(config_.workers);
    }
    if (warm_[worker].size() != job.problem.f_max.size()) {
        warm_[worker] = Eigen::VectorXd::Constant(job.problem.f_max.size(), 0.1);
    }
    events = record_event(std::move(events), EventId::before_so, start);
    ActivationResult r = solve_activation(job.problem, warm_[worker], config_.options);
    r.events = record_event(std::move(events), EventId::activations_calculated, end);
    r.index = job.index;
    r.t = job.t;
    r.worker = worker;
    warm_[worker] = r.a;
    finished_.emplace(job.index, std::move(r));
    completions_.push({end, job.index});
}

void LogicalSoEngine::finish() {
    while (!completions_.empty()) {
        advance(completions_.top().at);
    }
    if (auto d = sequencer_.next_deadline()) {
        advance(*d + 1.0);
    }
}

// --- Threaded engine ---------------------------------------------------------

ThreadedSoEngine::ThreadedSoEngine(SoEngineConfig config, const SteadyClock& clock,
                                   ResultSink sink)
    : config_(std::move(config)),
      clock_(clock),
      sink_(std::move(sink)),
      sequencer_(config_.deadline_s) {
    if (config_.workers == 0) {
        throw Error("SO engine needs at least one worker");
    }
    for (std::size_t i = 0; i < config_.workers; ++i) {
        workers_.push_back(std::make_unique<Worker>());
    }
    for (std::size_t i = 0; i < config_.workers; ++i) {
        workers_[i]->thread = std::thread(&ThreadedSoEngine::worker_loop, this, i);
    }
    seq_thread_ = std::thread(&ThreadedSoEngine::sequencer_loop, this);
}

ThreadedSoEngine::~ThreadedSoEngine() {
    try {
        finish();
    } catch (...) {
    }
}

void ThreadedSoEngine::submit(SoJob job) {
    const double now = clock_.now();
    const auto t0 = job.events.time_of(EventId::joint_angles_produced);
    if (!t0) {
        throw Error("SO job without event 0");
    }
    job.events = record_event(std::move(job.events), EventId::so_received, now);
    const std::size_t worker = dispatch(job.index, config_.workers);
    {
        std::lock_guard lock(mutex_);
        if (stopping_) {
            throw Error("SO engine already finished");
        }
        sequencer_.expect(job.index, job.t, *t0);
        assignments_.push_back(worker);
        ++outstanding_;
        workers_[worker]->queue.push_back(std::move(job));
    }
    workers_[worker]->cv.notify_one();
    seq_cv_.notify_all();
}

void ThreadedSoEngine::worker_loop(std::size_t id) {
    Worker& self = *workers_[id];
    for (;;) {
        SoJob job;
        {
            std::unique_lock lock(mutex_);
            self.cv.wait(lock, [&] { return stopping_ || !self.queue.empty(); });
            if (self.queue.empty()) {
                return;
            }
            job = std::move(self.queue.front());
            self.queue.pop_front();
        }
        if (self.warm.size() != job.problem.f_max.size()) {
            self.warm = Eigen::VectorXd::Constant(job.problem.f_max.size(), 0.1);
        }
        EventLog events = record_event(std::move(job.events), EventId::before_so, clock_.now());
        if (config_.extra_delay) {
            const double extra = config_.extra_delay(job.index);
            if (extra > 0.0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(extra));
            }
        }
        ActivationResult r = solve_activation(job.problem, self.warm, config_.options);
        r.events = record_event(std::move(events), EventId::activations_calculated, clock_.now());
        r.index = job.index;
        r.t = job.t;
        r.worker = id;
        self.warm = r.a;
        {
            std::lock_guard lock(mutex_);
            results_.push_back(std::move(r));
        }
        seq_cv_.notify_all();
    }
}

void ThreadedSoEngine::sequencer_loop() {
    std::unique_lock lock(mutex_);
    for (;;) {
        const auto deadline = sequencer_.next_deadline();
        auto ready = [&] { return seq_stop_ || !results_.empty(); };
        if (deadline) {
            seq_cv_.wait_until(lock, clock_.at(*deadline + 1e-6), ready);
        } else {
            seq_cv_.wait(lock, ready);
        }
        Sequencer::Output out = sequencer_.advance(clock_.now());
        while (!results_.empty()) {
            ActivationResult r = std::move(results_.front());
            results_.pop_front();
            Sequencer::Output o = sequencer_.on_result(std::move(r), clock_.now());
            --outstanding_;
            for (auto& e : o.emitted) out.emitted.push_back(std::move(e));
            for (auto& d : o.discarded) out.discarded.push_back(std::move(d));
        }
        const bool done = seq_stop_ && outstanding_ == 0;
        lock.unlock();
        if (sink_) {
            for (const auto& r : out.emitted) sink_(r, false);
            for (const auto& r : out.discarded) sink_(r, true);
        }
        seq_cv_.notify_all();
        lock.lock();
        if (done) {
            return;
        }
    }
}

void ThreadedSoEngine::finish() {
    {
        std::unique_lock lock(mutex_);
        if (finished_) {
            return;
        }
        finished_ = true;
        seq_cv_.wait(lock, [&] { return outstanding_ == 0; });
        stopping_ = true;
        seq_stop_ = true;
    }
    for (auto& w : workers_) {
        w->cv.notify_all();
    }
    seq_cv_.notify_all();
    for (auto& w : workers_) {
        if (w->thread.joinable()) w->thread.join();
    }
    if (seq_thread_.joinable()) seq_thread_.join();
}

std::vector<std::size_t> ThreadedSoEngine::assignments() const {
    std::lock_guard lock(mutex_);
    return assignments_;
}

std::size_t ThreadedSoEngine::received() const {
    std::lock_guard lock(mutex_);
    return sequencer_.received();
}

std::size_t ThreadedSoEngine::emitted() const {
    std::lock_guard lock(mutex_);
    return sequencer_.emitted();
}

std::size_t ThreadedSoEngine::discarded() const {
    std::lock_guard lock(mutex_);
    return sequencer_.discarded();
}

} // namespace mskrt
