#!/usr/bin/env python3
"""Writes the four task scenes and their reference operator trajectories.

Scene checkpoints and trajectory waypoints are built from the same poses, so
regenerating keeps the two in step. Output goes to data/scenes and
data/trajectories next to this script's repository root.

    python3 tools/gen_reference_data.py [--root DIR]
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

V_MAX = 0.0625
W_MAX = 0.25
SLOW = 1.0 / 3.0
STREAM_HZ = 10.0

R_HOME = Rotation.from_matrix([[0, 1, 0], [1, 0, 0], [0, 0, -1]])  # tool z pointing down
R_SIDE = Rotation.from_euler("y", -math.pi / 2) * R_HOME           # tool z along +x
IDENT = Rotation.identity()


def quat(r):
    x, y, z, w = r.as_quat()
    if w < 0:
        x, y, z, w = -x, -y, -z, -w
    return [round(float(v), 12) for v in (w, x, y, z)]


def pose(p, r):
    return {"position": [round(float(v), 12) for v in p], "orientation": quat(r)}


def region(p, r, pos_tol, ori_tol):
    return {"center": pose(p, r), "position_tolerance": pos_tol, "orientation_tolerance": ori_tol}


def compose(pa, ra, pb, rb):
    return np.asarray(pa) + ra.apply(pb), ra * rb


def inverse(p, r):
    ri = r.inv()
    return -ri.apply(p), ri


class Script:
    """Operator script: hold the sphere at a target while the arm converges."""

    def __init__(self, start_p, start_r):
        self.t = 0.0
        self.events = []
        self.p = np.asarray(start_p, dtype=float)
        self.r = start_r
        self.mode = "normal"

    def _emit(self, msg_type, payload):
        self.events.append({"type": msg_type, "seq": len(self.events) + 1,
                            "timestamp": round(self.t, 6), "payload": payload})

    def _stream(self, duration):
        end = self.t + duration
        while self.t < end - 1e-9:
            self._emit("pose_target", dict(pose(self.p, self.r), engaged=True))
            self.t += 1.0 / STREAM_HZ

    def move(self, p, r, settle=None):
        scale = SLOW if self.mode == "slow" else 1.0
        dist = float(np.linalg.norm(np.asarray(p) - self.p))
        ang = float((r * self.r.inv()).magnitude())
        travel = max(dist / (scale * V_MAX), ang / (scale * W_MAX))
        if settle is None:
            settle = 5.0 / scale
        self.p, self.r = np.asarray(p, dtype=float), r
        self._stream(travel + settle)

    def hold(self, duration):
        self._stream(duration)

    def gripper(self, action, source="voice"):
        self._emit("gripper", {"action": action, "source": source})
        self.t += 0.05
        self.hold(1.0)

    def speed(self, mode):
        self.mode = mode
        self._emit("speed_mode", {"mode": mode})
        self.t += 0.05

    def release(self):
        self._emit("pose_target", dict(pose(self.p, self.r), engaged=False))
        self.t += 0.1


HOME_P = [0.5, 0.0014, 0.3]  # tool position at the chain's home configuration


def pour():
    bowl = [0.55, -0.15, 0.05]
    grasp_off = [0.0, 0.0, 0.04]
    grasp_p = np.add(bowl, grasp_off)
    above_p = grasp_p + [0, 0, 0.11]
    pour_p = np.array([0.55, 0.05, 0.20])
    half = Rotation.from_euler("x", -0.6) * R_HOME
    full = Rotation.from_euler("x", -1.2) * R_HOME

    scene = {
        "id": "POUR",
        "time_limit": 180,
        "partial_threshold": 2,
        "objects": [{"id": "bowl_full", "pose": pose(bowl, IDENT)},
                    {"id": "bowl_empty", "pose": pose([0.55, 0.15, 0.05], IDENT)}],
        "grasp_zones": [{"object": "bowl_full", "name": "rim", "offset": pose(grasp_off, R_HOME),
                         "position_tolerance": 0.02, "orientation_tolerance": 0.2}],
        "checkpoints": [
            {"name": "grasp", "tool": region(grasp_p, R_HOME, 0.02, 0.2), "gripper": "closed", "held": "bowl_full"},
            {"name": "transport", "tool": region(pour_p, R_HOME, 0.02, 0.2), "held": "bowl_full"},
            {"name": "tilt_half", "tool": region(pour_p, half, 0.02, 0.1), "held": "bowl_full",
             "max_angular_speed": 0.1},
            {"name": "tilt_full", "tool": region(pour_p, full, 0.02, 0.1), "held": "bowl_full"},
            {"name": "upright", "tool": region(pour_p, R_HOME, 0.02, 0.1), "held": "bowl_full"},
            {"name": "place_back", "tool": region(grasp_p, R_HOME, 0.02, 0.2), "gripper": "open", "held": "none",
             "object": {"id": "bowl_full", "region": region(bowl, IDENT, 0.02, 0.2)}},
        ],
    }

    s = Script(HOME_P, R_HOME)
    s.move(above_p, R_HOME)
    s.move(grasp_p, R_HOME)
    s.gripper("close")
    s.move(above_p, R_HOME, settle=1.0)
    s.move(pour_p, R_HOME)
    s.speed("slow")
    s.move(pour_p, full, settle=8.0)
    s.move(pour_p, R_HOME, settle=8.0)
    s.speed("normal")
    s.move(above_p, R_HOME, settle=1.0)
    s.move(grasp_p, R_HOME)
    s.gripper("open")
    s.release()
    return scene, s.events


def peg_in_hole():
    piece = [0.45, -0.2, 0.03]
    slot = [0.6, 0.1, 0.03]
    off = [0.0, 0.0, 0.02]
    grasp_p = np.add(piece, off)
    insert_p = np.add(slot, off)
    lift_p = grasp_p + [0, 0, 0.10]
    above_slot = insert_p + [0, 0, 0.10]

    scene = {
        "id": "PEG_IN_HOLE",
        "time_limit": 180,
        "partial_threshold": 3,
        "objects": [{"id": "piece", "pose": pose(piece, IDENT)}],
        "grasp_zones": [{"object": "piece", "name": "top", "offset": pose(off, R_HOME),
                         "position_tolerance": 0.01, "orientation_tolerance": 0.1}],
        "checkpoints": [
            {"name": "grasp", "tool": region(grasp_p, R_HOME, 0.01, 0.1), "gripper": "closed", "held": "piece"},
            {"name": "lift", "tool": region(lift_p, R_HOME, 0.02, 0.1), "held": "piece"},
            {"name": "above_slot", "tool": region(above_slot, R_HOME, 0.01, 0.1), "held": "piece"},
            {"name": "insert", "tool": region(insert_p, R_HOME, 0.005, 0.05), "held": "piece"},
            {"name": "release", "tool": region(insert_p, R_HOME, 0.01, 0.1), "gripper": "open", "held": "none",
             "object": {"id": "piece", "region": region(slot, IDENT, 0.005, 0.05)}},
        ],
    }

    s = Script(HOME_P, R_HOME)
    s.move(lift_p, R_HOME)
    s.move(grasp_p, R_HOME)
    s.gripper("close", "button")
    s.move(lift_p, R_HOME, settle=1.0)
    s.move(above_slot, R_HOME)
    s.speed("slow")
    s.move(insert_p, R_HOME, settle=10.0)
    s.gripper("open", "button")
    s.speed("normal")
    s.move(above_slot, R_HOME, settle=1.0)
    s.release()
    return scene, s.events


def ring_on_peg():
    roll = [0.6, -0.2, 0.2]
    holder = [0.6, 0.2, 0.15]
    pre_p = np.add(roll, [-0.10, 0, 0])
    lift_p = np.add(roll, [0, 0, 0.15])
    above_holder = np.add(holder, [0, 0, 0.20])

    scene = {
        "id": "RING_ON_PEG",
        "time_limit": 180,
        "partial_threshold": 3,
        "objects": [{"id": "roll", "pose": pose(roll, IDENT)}],
        "grasp_zones": [{"object": "roll", "name": "side", "offset": pose([0, 0, 0], R_SIDE),
                         "position_tolerance": 0.02, "orientation_tolerance": 0.15}],
        "checkpoints": [
            {"name": "pre_grasp", "tool": region(pre_p, R_SIDE, 0.02, 0.15), "gripper": "open", "held": "none"},
            {"name": "grasp", "tool": region(roll, R_SIDE, 0.02, 0.15), "gripper": "closed", "held": "roll"},
            {"name": "lift", "tool": region(lift_p, R_SIDE, 0.02, 0.15), "held": "roll"},
            {"name": "above_holder", "tool": region(above_holder, R_SIDE, 0.02, 0.15), "held": "roll"},
            {"name": "lower", "tool": region(holder, R_SIDE, 0.01, 0.15), "held": "roll"},
            {"name": "release", "tool": region(holder, R_SIDE, 0.02, 0.15), "gripper": "open", "held": "none",
             "object": {"id": "roll", "region": region(holder, IDENT, 0.01, 0.15)}},
        ],
    }

    s = Script(HOME_P, R_HOME)
    s.move(pre_p, R_SIDE)
    s.move(roll, R_SIDE)
    s.gripper("toggle", "double_tap")
    s.move(lift_p, R_SIDE, settle=1.0)
    s.move(above_holder, R_SIDE, settle=1.0)
    s.move(holder, R_SIDE)
    s.gripper("open")
    s.move(np.add(holder, [-0.10, 0, 0]), R_SIDE, settle=1.0)
    s.release()
    return scene, s.events


def bookshelf():
    book = [0.45, 0.0, 0.02]
    top_off_p, top_off_r = [0.0, 0.0, 0.02], R_HOME
    top_p, top_r = compose(book, IDENT, top_off_p, top_off_r)

    # Stand the book on its edge: carry it with the top grasp and turn the tool sideways.
    stand_tool_p = np.array([0.43, -0.15, 0.08])
    grip_p, grip_r = inverse(top_off_p, top_off_r)          # book in tool frame
    stood_p, stood_r = compose(stand_tool_p, R_SIDE, grip_p, grip_r)

    # Edge grasp: from above, on the book's upper edge (book +x points up once stood).
    edge_off_p = [0.09, 0.0, 0.0]
    edge_off_r = stood_r.inv() * R_HOME
    edge_p, edge_r = compose(stood_p, stood_r, edge_off_p, edge_off_r)

    shelf_tool_p = np.array([0.65, 0.15, 0.22])
    held_p, held_r = inverse(edge_off_p, edge_off_r)
    shelved_p, shelved_r = compose(shelf_tool_p, R_HOME, held_p, held_r)
    lift_p = edge_p + [0, 0, 0.12]
    above_shelf = shelf_tool_p + [0, 0, 0.08]

    scene = {
        "id": "BOOKSHELF",
        "time_limit": 180,
        "partial_threshold": 3,
        "objects": [{"id": "book", "pose": pose(book, IDENT)}],
        "grasp_zones": [
            {"object": "book", "name": "top", "offset": pose(top_off_p, top_off_r),
             "position_tolerance": 0.02, "orientation_tolerance": 0.2},
            {"object": "book", "name": "edge", "offset": pose(edge_off_p, edge_off_r),
             "position_tolerance": 0.02, "orientation_tolerance": 0.2},
        ],
        "checkpoints": [
            {"name": "top_grasp", "tool": region(top_p, top_r, 0.02, 0.2), "gripper": "closed", "held": "book"},
            {"name": "stand", "tool": region(stand_tool_p, R_SIDE, 0.02, 0.15), "gripper": "open", "held": "none",
             "object": {"id": "book", "region": region(stood_p, stood_r, 0.02, 0.15)}},
            {"name": "edge_grasp", "tool": region(edge_p, edge_r, 0.02, 0.2), "gripper": "closed", "held": "book"},
            {"name": "shelve", "tool": region(shelf_tool_p, R_HOME, 0.01, 0.1), "held": "book"},
            {"name": "release", "tool": region(shelf_tool_p, R_HOME, 0.02, 0.2), "gripper": "open", "held": "none",
             "object": {"id": "book", "region": region(shelved_p, shelved_r, 0.015, 0.1)}},
        ],
    }

    s = Script(HOME_P, R_HOME)
    s.move(top_p + [0, 0, 0.08], R_HOME, settle=1.0)
    s.move(top_p, R_HOME)
    s.gripper("close")
    s.move(top_p + [0, 0, 0.08], R_HOME, settle=1.0)
    s.move(stand_tool_p, R_SIDE)
    s.gripper("open")
    s.move(edge_p + [0, 0, 0.06], edge_r, settle=1.0)
    s.move(edge_p, edge_r)
    s.gripper("close")
    s.move(lift_p, R_HOME, settle=1.0)
    s.move(above_shelf, R_HOME, settle=1.0)
    s.move(shelf_tool_p, R_HOME)
    s.gripper("open")
    s.move(above_shelf, R_HOME, settle=1.0)
    s.release()
    return scene, s.events


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--root", type=Path, default=Path(__file__).resolve().parent.parent)
    args = ap.parse_args()
    scenes = args.root / "data" / "scenes"
    trajs = args.root / "data" / "trajectories"
    scenes.mkdir(parents=True, exist_ok=True)
    trajs.mkdir(parents=True, exist_ok=True)
    for build in (pour, peg_in_hole, ring_on_peg, bookshelf):
        scene, events = build()
        stem = scene["id"].lower()
        (scenes / f"{stem}.json").write_text(json.dumps(scene, indent=2) + "\n")
        with open(trajs / f"{stem}.jsonl", "w") as f:
            for ev in events:
                f.write(json.dumps(ev, separators=(",", ":")) + "\n")
        print(f"{stem}: {len(scene['checkpoints'])} checkpoints, {len(events)} events, "
              f"{events[-1]['timestamp']:.1f} s scripted")


if __name__ == "__main__":
    main()
