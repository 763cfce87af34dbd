#!/usr/bin/env python3
"""Regenerates data/cmdp/*.json. Rewards and costs are multiples of 1/4."""
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "cmdp"
SLIP = 0.1


def write(name, horizon, trans, reward, cost):
    doc = {
        "format": "pls-cmdp", "version": 1, "name": name,
        "num_states": len(trans), "num_actions": len(trans[0]),
        "horizon": horizon, "initial_state": 0, "jitter": 0.0,
        "transition": trans, "reward": reward, "cost": cost,
    }
    (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


def move(n, target, fallback):
    # Intended successor with probability 1 - SLIP, else `fallback`.
    r = [0.0] * n
    r[target] += 1.0 - SLIP
    r[fallback] += SLIP
    return r


def chain4():
    # walk is cheap, run is costly but gains more reward further along.
    n = 4
    trans, reward, cost = [], [], []
    for s in range(n):
        up = min(s + 1, n - 1)
        trans.append([move(n, s, up), move(n, up, s)])
        reward.append([[0.0, 0.25, 0.25, 0.5][s], [0.25, 0.5, 0.75, 1.0][s]])
        cost.append([[0.0, 0.0, 0.25, 0.25][s], [0.5, 0.5, 0.75, 1.0][s]])
    write("chain4", 5, trans, reward, cost)


def hazard6():
    # 0 start, 1-2 long safe path, 3-4 short path along a hazard, 5 hazard.
    n = 6
    trans = [
        [move(n, 1, 0), move(n, 3, 0), move(n, 0, 1)],
        [move(n, 2, 1), move(n, 3, 1), move(n, 1, 0)],
        [move(n, 2, 1), move(n, 4, 2), move(n, 1, 2)],
        [move(n, 4, 3), move(n, 4, 5), move(n, 3, 5)],
        [move(n, 4, 3), move(n, 4, 5), move(n, 3, 4)],
        [move(n, 3, 5), move(n, 4, 5), move(n, 5, 3)],
    ]
    reward = [[0.0, 0.25, 0.0], [0.25, 0.25, 0.0], [0.5, 0.5, 0.25],
              [0.5, 0.75, 0.25], [0.75, 1.0, 0.5], [0.25, 0.5, 0.0]]
    cost = [[0.0, 0.25, 0.0], [0.0, 0.25, 0.0], [0.0, 0.25, 0.0],
            [0.25, 0.5, 0.25], [0.25, 0.75, 0.25], [1.0, 1.0, 0.75]]
    write("hazard6", 8, trans, reward, cost)


def ring5():
    # Ring of 5 states; jumping two ahead pays more reward and more cost.
    n = 5
    trans, reward, cost = [], [], []
    for s in range(n):
        trans.append([move(n, (s + 1) % n, s), move(n, (s + 2) % n, (s + 1) % n)])
        reward.append([[0.25, 0.25, 0.5, 0.25, 0.5][s], [0.5, 0.75, 0.75, 0.5, 1.0][s]])
        cost.append([[0.0, 0.0, 0.25, 0.0, 0.25][s], [0.25, 0.5, 0.75, 0.5, 0.5][s]])
    write("ring5", 8, trans, reward, cost)


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    chain4()
    hazard6()
    ring5()
