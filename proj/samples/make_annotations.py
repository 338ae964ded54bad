"""Writes the sample annotation files from a known synthetic camera.

Camera: f = 700 px, 640x480 image, principal point at the centre, 1.2 units
above a ground plane, pitched 25 degrees down and yawed 35 degrees.
"""
import json
import math
import pathlib

import numpy as np

F, W, H = 700.0, 640.0, 480.0
PITCH, YAW = math.radians(25.0), math.radians(35.0)
K = np.array([[F, 0, W / 2], [0, F, H / 2], [0, 0, 1.0]])

fwd = np.array([math.cos(YAW) * math.cos(PITCH), math.sin(YAW) * math.cos(PITCH), -math.sin(PITCH)])
right = np.array([math.sin(YAW), -math.cos(YAW), 0.0])
down = np.cross(fwd, right)
R = np.vstack([right, down, fwd])


def vp(d):
    p = K @ R @ np.asarray(d, float)
    return [round(float(v), 6) for v in (p[:2] / p[2])]


def image(x):
    c = np.array([0, 0, 1.2])
    p = K @ R @ (np.asarray(x, float) - c)
    return [round(float(v), 6) for v in (p[:2] / p[2])]


out = pathlib.Path(__file__).parent
x_dir, y_dir, z_dir = [1, 0, 0], [0, 1, 0], [0, 0, 1]
horizon = np.cross(np.append(vp(x_dir), 1), np.append(vp(y_dir), 1))
horizon = [float(v) for v in horizon / np.linalg.norm(horizon)]

kitchen = {
    "image": {"width": W, "height": H},
    "points": {"vp1": vp(x_dir), "vp2": vp(y_dir)},
    "queries": [
        {"type": "fov", "name": "field of view"},
        {"type": "tilt", "name": "camera tilt"},
        {"type": "plane_angle", "a": "vp1", "b": "vp2", "name": "floor corner"},
    ],
}
three = {
    "image": {"width": W, "height": H},
    "points": {"vp1": vp(x_dir), "vp2": vp(y_dir), "vp3": vp(z_dir)},
}
tiles = {
    "image": {"width": W, "height": H},
    "points": {"edge": vp(x_dir), "diagonal": vp([1, 1, 0]), "edge2": vp(y_dir)},
    "lines": {"horizon": horizon},
    "known_angles": [
        {"vp_a": "edge", "vp_b": "diagonal", "theta_deg": 45.0},
        {"vp_a": "edge2", "vp_b": "diagonal", "theta_deg": 45.0},
    ],
    "queries": [
        {"type": "plane_angle", "a": "edge", "b": "edge2", "name": "tile corner"},
        {"type": "ray_angle", "a": image([4, 0, 0]), "b": image([4, 2, 0]), "name": "two tile corners"},
    ],
}
measured = {
    "image": {"width": W, "height": H},
    "camera": {"focal": F, "principal_point": [W / 2, H / 2]},
    "points": {"vp1": vp(x_dir), "vp2": vp(y_dir)},
    "lines": {"horizon": horizon},
    "queries": [
        {"type": "fov"},
        {"type": "tilt"},
        {"type": "plane_angle", "a": "vp1", "b": "vp2"},
    ],
}
for name, doc in [("kitchen", kitchen), ("three_vp", three), ("tiles", tiles), ("measure", measured)]:
    (out / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
