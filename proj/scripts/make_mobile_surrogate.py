#!/usr/bin/env python3
# Copyright 2026 The cfshap Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates data/mobile.csv.

The public "mobile price classification" table cannot be fetched from the
build environment, so the repository ships a seeded surrogate with the same
20 feature columns, value ranges and value granularity, and a 4-level
price_range label (500 rows per class) that is driven mainly by ram, battery
power and screen resolution.
"""

import argparse

import numpy as np

COLUMNS = [
    "battery_power", "blue", "clock_speed", "dual_sim", "fc", "four_g",
    "int_memory", "m_dep", "mobile_wt", "n_cores", "pc", "px_height",
    "px_width", "ram", "sc_h", "sc_w", "talk_time", "three_g",
    "touch_screen", "wifi",
]


def generate(rows, seed):
    rng = np.random.default_rng(seed)
    c = {}
    c["battery_power"] = rng.integers(501, 1999, rows)
    c["blue"] = rng.integers(0, 2, rows)
    c["clock_speed"] = np.round(rng.uniform(0.5, 3.0, rows), 1)
    c["dual_sim"] = rng.integers(0, 2, rows)
    c["fc"] = np.minimum(rng.geometric(0.22, rows) - 1, 19)
    c["four_g"] = rng.integers(0, 2, rows)
    c["int_memory"] = rng.integers(2, 65, rows)
    c["m_dep"] = np.round(rng.uniform(0.1, 1.0, rows), 1)
    c["mobile_wt"] = rng.integers(80, 201, rows)
    c["n_cores"] = rng.integers(1, 9, rows)
    c["pc"] = np.maximum(c["fc"], rng.integers(0, 21, rows))
    c["px_height"] = rng.integers(0, 1961, rows)
    c["px_width"] = np.maximum(c["px_height"] // 2 + 500,
                               rng.integers(500, 1999, rows))
    c["px_width"] = np.minimum(c["px_width"], 1998)
    c["ram"] = rng.integers(256, 3999, rows)
    c["sc_h"] = rng.integers(5, 20, rows)
    c["sc_w"] = np.minimum(rng.integers(0, 19, rows), c["sc_h"] - 1)
    c["talk_time"] = rng.integers(2, 21, rows)
    c["three_g"] = np.where(c["four_g"] == 1, 1,
                            (rng.uniform(size=rows) < 0.52).astype(int))
    c["touch_screen"] = rng.integers(0, 2, rows)
    c["wifi"] = rng.integers(0, 2, rows)

    def z(v):
        return (v - v.mean()) / v.std()

    score = (2.6 * z(c["ram"]) + 0.55 * z(c["battery_power"])
             + 0.3 * z(c["px_height"]) + 0.3 * z(c["px_width"])
             + 0.25 * rng.standard_normal(rows))
    order = np.argsort(score, kind="stable")
    label = np.empty(rows, dtype=int)
    label[order] = np.arange(rows) * 4 // rows
    return c, label


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=20190810)
    parser.add_argument("--out", default="data/mobile.csv")
    args = parser.parse_args()
    cols, label = generate(args.rows, args.seed)
    with open(args.out, "w", newline="\n") as f:
        f.write(",".join(COLUMNS + ["price_range"]) + "\n")
        for i in range(args.rows):
            cells = []
            for name in COLUMNS:
                v = cols[name][i]
                cells.append(f"{v:.1f}" if name in ("clock_speed", "m_dep")
                             else str(int(v)))
            cells.append(str(label[i]))
            f.write(",".join(cells) + "\n")


if __name__ == "__main__":
    main()
