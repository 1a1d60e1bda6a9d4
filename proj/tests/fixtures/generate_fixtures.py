#!/usr/bin/env python3
"""Regenerates the checked-in test fixtures.

Everything is derived from fixed seeds, so rerunning the script reproduces
the committed files byte for byte.

  synthetic/   100 ScienceQA-style problems with embeddings (dim 32)
  handbuilt/   8 generic_jsonl records spanning every report category
"""

import json
import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

WORDS = [
    "granite", "marble", "basalt", "quartz", "river", "glacier", "desert", "ocean",
    "magnet", "copper", "pulley", "lever", "fern", "moss", "otter", "heron",
    "senate", "treaty", "harbor", "canal", "verb", "noun", "simile", "idiom",
]
SUBJECTS = ["natural science", "social science", "language science"]


def unit_vector(rng, dim):
    while True:
        v = [rng.gauss(0.0, 1.0) for _ in range(dim)]
        n = math.sqrt(sum(x * x for x in v))
        if n > 1e-3:
            return [float("%.8g" % (x / n)) for x in v]


def dump_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, separators=(",", ":")) + "\n")


def embedding_row(pid, text_emb, image_emb, dim, tag):
    return {
        "id": pid,
        "text_embedding": text_emb,
        "image_embedding": image_emb,
        "dim": dim,
        "encoder_tag": tag,
    }


def synthetic():
    rng = random.Random(20240601)
    dim, tag = 32, "synthetic-gauss-32"
    problems = {}
    embeddings = [{"manifest": 1, "dim": dim, "encoder_tag": tag}]
    for i in range(100):
        pid = "p%03d" % i
        n_choices = rng.choice([2, 3, 4])
        choices = rng.sample(WORDS, n_choices)
        answer = rng.randrange(n_choices)
        has_image = rng.random() < 0.3
        has_hint = rng.random() < 0.5
        problems[pid] = {
            "question": "Synthetic question %d: which of these is item %s?" % (i, choices[answer]),
            "choices": choices,
            "answer": answer,
            "hint": "Context for question %d." % i if has_hint else "",
            "image": "image.png" if has_image else None,
            "task": "closed choice",
            "grade": "grade%d" % rng.randint(1, 12),
            "subject": rng.choice(SUBJECTS),
            "topic": "topic-%d" % (i % 7),
            "category": "synthetic",
            "skill": "synthetic",
            "lecture": "Lecture for question %d." % i,
            "solution": "The item asked about is %s.\nSo the answer is %s." % (choices[answer], choices[answer]),
            "split": "train",
        }
        text_emb = unit_vector(rng, dim)
        image_emb = unit_vector(rng, dim) if has_image else None
        embeddings.append(embedding_row(pid, text_emb, image_emb, dim, tag))

    out = os.path.join(HERE, "synthetic")
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "problems.json"), "w", encoding="utf-8", newline="\n") as f:
        json.dump(problems, f, indent=1)
        f.write("\n")
    dump_jsonl(os.path.join(out, "embeddings.jsonl"), embeddings)

    # A single query record as the embedder prints it, for `retrieve`.
    with open(os.path.join(out, "query_p007.json"), "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(embeddings[1 + 7], separators=(",", ":")) + "\n")


# id, subject, hint, image, grade, gold
HANDBUILT = [
    ("r1", "natural", True, False, 3, 0),
    ("r2", "natural", False, True, 8, 1),
    ("r3", "natural", True, True, 5, 0),
    ("r4", "social", False, False, 2, 0),
    ("r5", "social", True, False, 10, 2),
    ("r6", "language", False, False, 7, 0),
    ("r7", "language", False, True, 12, 3),
    ("r8", "social", False, False, 4, 1),
]


def handbuilt():
    rng = random.Random(8)
    dim, tag = 8, "handbuilt-8"
    records = []
    embeddings = [{"manifest": 1, "dim": dim, "encoder_tag": tag}]
    for rid, subject, hint, image, grade, gold in HANDBUILT:
        row = {
            "id": rid,
            "question": "Hand-built question %s?" % rid,
            "choices": ["alpha " + rid, "beta " + rid, "gamma " + rid, "delta " + rid],
            "gold_index": gold,
            "subject": subject,
            "grade": grade,
            "rationale": "Worked reasoning for %s." % rid,
        }
        if hint:
            row["hint"] = "Hint for %s." % rid
        if image:
            row["image"] = rid + ".png"
        records.append(row)
        embeddings.append(
            embedding_row(rid, unit_vector(rng, dim), unit_vector(rng, dim) if image else None, dim, tag))

    out = os.path.join(HERE, "handbuilt")
    os.makedirs(out, exist_ok=True)
    dump_jsonl(os.path.join(out, "records.jsonl"), records)
    dump_jsonl(os.path.join(out, "embeddings.jsonl"), embeddings)


if __name__ == "__main__":
    synthetic()
    handbuilt()
