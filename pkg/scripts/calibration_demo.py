"""Inject phase errors into a compiled projective program and compare correction strategies.

For each seed: Born deviation before correction, after a single fit at the compiled
settings, and after the offset measure/fit/correct loop.  With --shots the device
returns sampled counts instead of exact frequencies.

    python3 scripts/calibration_demo.py --seeds 20 [--shots 100000]
"""

import argparse
from dataclasses import dataclass

import numpy as np

from povm_forge.compiler import compile_povm
from povm_forge.linalg import make_rng
from povm_forge.povm import mub_probe_states_d4, random_rank1_povm
from povm_forge.simulator import (CountTable, PhaseError, apply_correction, calibrate, calibrate_loop,
                                  sample_counts, simulate_batch)


@dataclass
class Config:
    dim: int = 4
    outcomes: int = 4
    size: float = 0.05
    seeds: int = 20
    shots: int = 0        # 0 means exact frequencies
    rounds: int = 2
    bias: float = 0.3


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outcomes", type=int, default=Config.outcomes)
    ap.add_argument("--size", type=float, default=Config.size, help="max |dphi| in rad")
    ap.add_argument("--seeds", type=int, default=Config.seeds)
    ap.add_argument("--shots", type=int, default=Config.shots)
    ap.add_argument("--rounds", type=int, default=Config.rounds)
    ap.add_argument("--bias", type=float, default=Config.bias)
    a = ap.parse_args()
    cfg = Config(4, a.outcomes, a.size, a.seeds, a.shots, a.rounds, a.bias)

    program, _ = compile_povm(random_rank1_povm(cfg.dim, cfg.outcomes, 0))
    probes = mub_probe_states_d4()
    ideal = simulate_batch(program, probes.states)
    print(f"{'seed':>4}  {'uncorrected':>11}  {'single fit':>10}  {'loop':>9}")
    for seed in range(cfg.seeds):
        rng = make_rng(seed)
        dev = rng.uniform(-cfg.size, cfg.size, program.phases.shape)
        dev.flat[rng.integers(dev.size)] = cfg.size
        err = PhaseError(dev)
        calls = iter(range(10**6))

        def measure(p, err=err):
            if cfg.shots:
                return sample_counts(p, probes, cfg.shots, 1000 * seed + next(calls), err)
            return CountTable(simulate_batch(p, probes.states, err))

        def deviation(p, err=err):
            return np.abs(simulate_batch(p, probes.states, err) - ideal).max()

        single = apply_correction(program, calibrate(program, probes, measure(program)).error)
        loop = calibrate_loop(program, probes, measure, rounds=cfg.rounds, bias=cfg.bias)
        print(f"{seed:>4}  {deviation(program):11.2e}  {deviation(single):10.2e}  {deviation(loop.corrected):9.2e}")


if __name__ == "__main__":
    main()
