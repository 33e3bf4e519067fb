"""Largest SIC witness value for every number of outcomes N = 1..16.

The middle of the sweep needs thousands of small SDPs; use --threads to spread them.

    python3 scripts/noutcome_sweep.py --threads 8 --out results/noutcome.csv
"""

import argparse
import csv
import time
from dataclasses import dataclass
from pathlib import Path

from povm_forge.tasks import max_psuc_n_outcomes

REFERENCE = [0.0625, 0.1184, 0.1708, 0.2210, 0.2263, 0.2323, 0.2367, 0.2392,
             0.2418, 0.2431, 0.2445, 0.2458, 0.2471, 0.2481, 0.2491, 0.2500]


@dataclass
class Config:
    ns: tuple[int, ...] = tuple(range(1, 17))
    threads: int = 1
    full_enumeration: bool = False
    out: Path = Path("results/noutcome.csv")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=list(Config.ns))
    ap.add_argument("--threads", type=int, default=Config.threads)
    ap.add_argument("--full-enumeration", action="store_true",
                    help="solve every subset instead of one per translation orbit")
    ap.add_argument("--out", type=Path, default=Config.out)
    a = ap.parse_args()
    cfg = Config(tuple(a.n), a.threads, a.full_enumeration, a.out)
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    with cfg.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "p_suc", "reference", "abs_diff", "n_sdps", "best_subset", "seconds"])
        for n in cfg.ns:
            t0 = time.perf_counter()
            res = max_psuc_n_outcomes(n, threads=cfg.threads, symmetry=not cfg.full_enumeration)
            dt = time.perf_counter() - t0
            ref = REFERENCE[n - 1]
            w.writerow([n, f"{res.value:.6f}", ref, f"{abs(res.value - ref):.2e}", res.n_sdps,
                        " ".join(map(str, res.best_subset)), f"{dt:.1f}"])
            fh.flush()
            print(f"N={n:>2}  {res.value:.6f}  ref {ref:.4f}  {res.n_sdps:>6} SDPs  {dt:7.1f} s")


if __name__ == "__main__":
    main()
