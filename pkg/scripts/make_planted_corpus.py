#!/usr/bin/env python3
"""Generate a planted-cluster corpus with everything the offline pipeline
needs: corpus.jsonl, summaries.jsonl, labels.jsonl, a pre-populated embedding
cache, and a matching config.json.
"""

import argparse
import json
import os

from pathdiv.core import save_jsonl
from pathdiv.embeddings import EmbeddingCache
from pathdiv.synthetic import PlantedSpec, build_planted_corpus, labels_records


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--problems", type=int, default=100)
    ap.add_argument("--cluster-sizes", default="6,2")
    ap.add_argument("--steps", type=int, default=4)
    ap.add_argument("--dimension", type=int, default=64)
    ap.add_argument("--step-signal", type=float, default=0.9)
    ap.add_argument("--summary-signal", type=float, default=0.45)
    ap.add_argument("--text-signal", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sizes = tuple(int(v) for v in args.cluster_sizes.split(","))
    spec = PlantedSpec(
        problems=args.problems,
        cluster_sizes=sizes,  # type: ignore[arg-type]
        steps_per_solution=args.steps,
        dimension=args.dimension,
        step_signal=args.step_signal,
        summary_signal=args.summary_signal,
        text_signal=args.text_signal,
        seed=args.seed,
    )
    corpus = build_planted_corpus(spec)

    os.makedirs(args.out, exist_ok=True)
    save_jsonl(corpus.problems, os.path.join(args.out, "corpus.jsonl"))
    save_jsonl(corpus.summaries.values(), os.path.join(args.out, "summaries.jsonl"))
    save_jsonl(labels_records(corpus), os.path.join(args.out, "labels.jsonl"))

    cache_path = os.path.join(args.out, "cache.jsonl")
    if os.path.exists(cache_path):
        os.remove(cache_path)
    corpus.populate_cache(EmbeddingCache(cache_path))

    config = {
        "embedding.model_id": spec.model_id,
        "embedding.mock_dimension": spec.dimension,
        "cache.path": cache_path,
        "curation.top_n_problems": 100,
        "curation.solutions_per_problem": 3,
        "curation.min_valid_solutions": min(10, spec.solutions_per_problem),
        # offset keeps downstream selector streams independent of the
        # label-shuffling stream used to build this corpus
        "curation.rng_seed": spec.seed + 1000,
        "curation.distance_method": "rpd",
    }
    with open(os.path.join(args.out, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"wrote {args.problems} problems x {spec.solutions_per_problem} solutions to {args.out}")
    print(f"random-pair success expectation: {spec.random_pair_expectation:.4f}")


if __name__ == "__main__":
    main()
