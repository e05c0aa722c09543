#!/usr/bin/env python3
"""Writes data/lower_body.json, the 23-coordinate demo model.

Segment parameters follow a generic 75 kg adult lower-body model. Muscle
moment arms are emitted as the exact negative derivative of each
musculotendon length polynomial, so both are shipped in the model file.
"""
import json
import math
import sys
from pathlib import Path

HALF_PI = math.pi / 2


def unit(v):
    n = math.sqrt(sum(c * c for c in v))
    return [c / n for c in v]


def rot_x_quat(angle):
    return [math.cos(angle / 2), math.sin(angle / 2), 0.0, 0.0]


def segment(name, mass, com, inertia):
    return {"name": name, "mass": mass, "com": com, "inertia": inertia + [0.0, 0.0, 0.0]}


def coord(name, default=0.0, lo=-HALF_PI, hi=HALF_PI):
    return {"name": name, "default": default, "range": [lo, hi]}


def joint(name, kind, parent, child, translation, coords, axis=None, rotation=None):
    j = {"name": name, "type": kind, "parent": parent, "child": child,
         "parent_offset": {"translation": translation}, "coordinates": coords}
    if rotation is not None:
        j["parent_offset"]["rotation"] = rotation
    if axis is not None:
        j["axis"] = axis
    return j


# Length polynomial L(q) = l0 - sum_c (a_c q_c + b_c q_c^2 / 2 + k_c q_c^3 / 3), so the moment
# arm about c is a_c + b_c q_c + k_c q_c^2.
MUSCLES = [
    # name, f_max, l0, {coordinate: (a, b, k)}
    ("iliopsoas", 2000.0, 0.16, {"hip_flexion": (0.050, -0.012, -0.004)}),
    ("glut_max", 1900.0, 0.20, {"hip_flexion": (-0.060, 0.006, 0.003)}),
    ("hamstrings", 2600.0, 0.42, {"hip_flexion": (-0.060, 0.004, 0.0),
                                  "knee_angle": (0.030, 0.006, -0.002)}),
    ("rectus_femoris", 1170.0, 0.44, {"hip_flexion": (0.040, -0.006, 0.0),
                                      "knee_angle": (-0.045, 0.008, 0.0)}),
    ("vasti", 4500.0, 0.25, {"knee_angle": (-0.045, 0.010, -0.002)}),
    ("gastrocnemius", 2240.0, 0.48, {"knee_angle": (0.020, -0.004, 0.0),
                                     "ankle_angle": (-0.050, -0.006, 0.002)}),
    ("soleus", 3550.0, 0.30, {"ankle_angle": (-0.050, -0.006, 0.002)}),
    ("tibialis_anterior", 905.0, 0.33, {"ankle_angle": (0.035, 0.004, 0.0)}),
]


def muscle(name, f_max, l0, arms, side):
    length_terms = [{"coeff": l0}]
    moment_arms = []
    for base, (a, b, k) in arms.items():
        c = f"{base}_{side}"
        length_terms += [
            {"coeff": -a, "exponents": {c: 1}},
            {"coeff": -b / 2, "exponents": {c: 2}},
            {"coeff": -k / 3, "exponents": {c: 3}},
        ]
        moment_arms.append({"coordinate": c, "terms": [
            {"coeff": a},
            {"coeff": b, "exponents": {c: 1}},
            {"coeff": k, "exponents": {c: 2}},
        ]})
    return {"name": f"{name}_{side}", "f_max": f_max, "moment_arms": moment_arms,
            "length": {"terms": length_terms}}


def build():
    segments = [segment("pelvis", 11.777, [-0.0707, 0.0, 0.0], [0.1028, 0.0871, 0.0579])]
    for s in ("r", "l"):
        segments += [
            segment(f"femur_{s}", 9.3014, [0.0, -0.17, 0.0], [0.1339, 0.0351, 0.1412]),
            segment(f"tibia_{s}", 3.7075, [0.0, -0.1867, 0.0], [0.0504, 0.0051, 0.0511]),
            segment(f"talus_{s}", 0.1, [0.0, 0.0, 0.0], [0.001, 0.001, 0.001]),
            segment(f"calcn_{s}", 1.25, [0.1, 0.03, 0.0], [0.0014, 0.0039, 0.0041]),
            segment(f"toes_{s}", 0.2166, [0.0346, 0.006, -0.0175 if s == "r" else 0.0175],
                    [0.0001, 0.0002, 0.0001]),
        ]
    segments.append(segment("torso", 34.2366, [-0.03, 0.32, 0.0], [1.4745, 0.7555, 1.4314]))

    coordinates = [
        coord("pelvis_tilt"), coord("pelvis_list"), coord("pelvis_rotation"),
        coord("pelvis_tx", 0.0, -5.0, 5.0), coord("pelvis_ty", 0.93, -1.0, 2.0),
        coord("pelvis_tz", 0.0, -5.0, 5.0),
    ]
    for s in ("r", "l"):
        coordinates += [
            coord(f"hip_flexion_{s}", 0.0, -2.0, 2.0),
            coord(f"hip_adduction_{s}", 0.0, -1.2, 1.2),
            coord(f"hip_rotation_{s}", 0.0, -1.2, 1.2),
            coord(f"knee_angle_{s}", 0.0, -1.2, 2.1),
            coord(f"ankle_angle_{s}"),
            coord(f"subtalar_angle_{s}"),
            coord(f"mtp_angle_{s}"),
        ]
    coordinates += [coord("lumbar_extension"), coord("lumbar_bending"), coord("lumbar_rotation")]

    joints = [joint("ground_pelvis", "free", "ground", "pelvis", [0.0, 0.0, 0.0],
                    ["pelvis_tilt", "pelvis_list", "pelvis_rotation",
                     "pelvis_tx", "pelvis_ty", "pelvis_tz"], rotation=rot_x_quat(HALF_PI))]
    for s in ("r", "l"):
        m = 1.0 if s == "r" else -1.0
        joints += [
            joint(f"hip_{s}", "ball", "pelvis", f"femur_{s}", [-0.0707, -0.0661, m * 0.0835],
                  [f"hip_flexion_{s}", f"hip_adduction_{s}", f"hip_rotation_{s}"]),
            joint(f"knee_{s}", "revolute", f"femur_{s}", f"tibia_{s}", [-0.0045, -0.396, 0.0],
                  [f"knee_angle_{s}"], axis=[0.0, 0.0, -1.0]),
            joint(f"ankle_{s}", "revolute", f"tibia_{s}", f"talus_{s}", [0.0, -0.43, 0.0],
                  [f"ankle_angle_{s}"], axis=[0.0, 0.0, 1.0]),
            joint(f"subtalar_{s}", "revolute", f"talus_{s}", f"calcn_{s}",
                  [-0.04877, -0.04195, m * 0.00792], [f"subtalar_angle_{s}"],
                  axis=unit([m * 0.78718, m * 0.60475, -0.12074])),
            joint(f"mtp_{s}", "revolute", f"calcn_{s}", f"toes_{s}",
                  [0.1788, -0.002, m * 0.00108], [f"mtp_angle_{s}"],
                  axis=unit([-m * 0.5809, 0.0, 0.8140])),
        ]
    joints.append(joint("back", "ball", "pelvis", "torso", [-0.1007, 0.0815, 0.0],
                        ["lumbar_extension", "lumbar_bending", "lumbar_rotation"]))

    muscles = []
    for s in ("r", "l"):
        for name, f_max, l0, arms in MUSCLES:
            muscles.append(muscle(name, f_max, l0, arms, s))

    mapping = []
    for j in joints:
        mapping.append({"frame": f"{j['child']}_link", "segment": j["child"],
                        "coordinates": j["coordinates"]})

    return {"name": "lower_body", "gravity": [0.0, 0.0, -9.80665], "segments": segments,
            "coordinates": coordinates, "joints": joints, "muscles": muscles,
            "mapping": mapping}


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "lower_body.json"
    out.write_text(json.dumps(build(), indent=1) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
