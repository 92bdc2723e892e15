#!/usr/bin/env python3
# Copyright 2026 The stb Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Inputs, scripted annotations and output checks for cli_smoke.sh."""

import json
import random
import sys
from pathlib import Path


def inputs(w):
    with open(w / "seeds.jsonl", "w") as f:
        for i in range(60):
            conv = {
                "id": f"h{i}",
                "domain": "dailydialog",
                "entities": [{"kind": "human", "system_name": "human"}] * 2,
                "exchanges": [[f"hello {i} turn {t}", f"reply {i} turn {t}"] for t in range(6)],
            }
            f.write(json.dumps(conv) + "\n")
    bots = [
        {"system_name": "Good", "builtin": "canned",
         "replies": ["one fine day", "the bus was late", "my sister bakes", "try the new cafe",
                     "lost my keys", "that film ran long", "rain tonight", "learning guitar"]},
        {"system_name": "Mid", "builtin": "canned", "replies": ["yes I think so", "tell me more"]},
        {"system_name": "Echo", "builtin": "echo"},
    ]
    (w / "bots.json").write_text(json.dumps({"bots": bots}))


def annotate(w):
    # Two fresh workers per batch; an entity with r repeated utterances in the
    # segment is called a bot with probability 1 - 0.5**r.
    plan = json.loads((w / "plan.json").read_text())
    convs = {c["id"]: c for c in plan["conversations"]}
    rng = random.Random(7)
    with open(w / "ann.jsonl", "w") as f:
        for b, batch in enumerate(plan["batches"]):
            for a in range(2):
                worker = f"w{b}-{a}"
                for item in batch["items"]:
                    seen, repeats = set(), [0, 0]
                    for ex in convs[item["conversation_id"]]["exchanges"][: item["k"]]:
                        for slot in range(2):
                            repeats[slot] += ex[slot] in seen
                            seen.add(ex[slot])
                    spotted = [rng.random() < 1 - 0.5 ** r for r in repeats]
                    labels = ["bot" if s else "human" for s in spotted]
                    prefs = {}
                    for feat in ("fluency", "specificity", "sensibleness"):
                        if spotted[0] != spotted[1] and rng.random() < 0.6:
                            prefs[feat] = "second" if spotted[0] else "first"
                        else:
                            prefs[feat] = rng.choice(["first", "tie", "second"])
                    rec = {"item_id": item["item_id"], "worker_id": worker, "labels": labels,
                           "preferences": prefs, "duration_seconds": 20.0,
                           "submitted_at": "2026-01-01T00:00:00Z"}
                    f.write(json.dumps(rec) + "\n")


def check(w):
    rank = json.loads((w / "rank.json").read_text())
    assert {s["system"] for s in rank["systems"]} == {"Good", "Mid", "Echo"}, rank["systems"]
    surv = json.loads((w / "surv.json").read_text())
    assert len(surv["systems"]) == 3
    assert (w / "curves.csv").read_text().startswith("system,time,survival")
    assert (w / "stab.csv").read_text().startswith("n,proportion")
    report = json.loads((w / "report" / "report.json").read_text())
    assert report["win_rate_order"] == ["Good", "Mid", "Echo"], report["win_rate_order"]
    assert report["survival"]["ranking"] == report["win_rate_order"]
    assert "## Survival" in (w / "report" / "report.md").read_text()


if __name__ == "__main__":
    {"inputs": inputs, "annotate": annotate, "check": check}[sys.argv[1]](Path(sys.argv[2]))
