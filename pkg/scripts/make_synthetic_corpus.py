#!/usr/bin/env python3
"""Emit a benchmark-shaped corpus file: 240 entries, 80 per difficulty,
subjects balanced at 60 each, 68 distinct subfields.

Usage: python scripts/make_synthetic_corpus.py [out.json] [--n 240]
"""
import argparse
import json
from pathlib import Path

SUBJECTS = ("Mathematics", "Physics", "Chemistry", "Computer Science")
SUBFIELDS = [f"Subfield {i:02d}" for i in range(68)]


def synthesize(n: int = 240) -> list[dict]:
    records = []
    for i in range(n):
        difficulty = ("Easy", "Medium", "Hard")[i * 3 // n] if n >= 3 else "Easy"
        records.append(
            {
                "id": f"synthetic-{i:03d}",
                "name": f"Synthetic Result {i:03d}",
                "description": f"Statement and context for synthetic benchmark item {i}.",
                "difficulty": difficulty,
                "subject": SUBJECTS[i % 4],
                "subfield": SUBFIELDS[i % len(SUBFIELDS)],
            }
        )
    return records


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", nargs="?", default="synthetic_corpus.json")
    parser.add_argument("--n", type=int, default=240)
    args = parser.parse_args()
    Path(args.out).write_text(json.dumps(synthesize(args.n), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {args.n} entries to {args.out}")


if __name__ == "__main__":
    main()
