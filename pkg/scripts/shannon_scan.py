"""Shannon-entropy lower bound of the SIC witness as a function of the node count m and of W.

    python3 scripts/shannon_scan.py --m 2 4 6 8 --w 0.2470 0.2473 0.2475
"""

import argparse
import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

from povm_forge.tasks import gauss_radau, min_entropy, shannon_bound


@dataclass
class Config:
    ms: list[int] = field(default_factory=lambda: [2, 4, 6, 8])
    ws: list[float] = field(default_factory=lambda: [0.2473])
    out: Path = Path("results/shannon_scan.csv")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, nargs="+", default=Config().ms)
    ap.add_argument("--w", type=float, nargs="+", default=Config().ws)
    ap.add_argument("--out", type=Path, default=Config.out)
    a = ap.parse_args()
    cfg = Config(a.m, a.w, a.out)
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    with cfg.out.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["W", "m", "c_m", "shannon_bound", "h_min", "status", "seconds"])
        for w in cfg.ws:
            h = min_entropy(w).h_min
            for m in cfg.ms:
                t0 = time.perf_counter()
                res = shannon_bound(w, m=m)
                dt = time.perf_counter() - t0
                out.writerow([w, m, f"{gauss_radau(m).c_m:.4f}", f"{res.bound:.6f}", f"{h:.6f}",
                              res.status, f"{dt:.1f}"])
                fh.flush()
                print(f"W={w:.5f} m={m:>2}  H >= {res.bound:.5f}  (H_min {h:.5f}, {res.status}, {dt:.0f} s)")


if __name__ == "__main__":
    main()
