"""Energy balance residual |E(T) - E(0) + int D| under repeated halving of a fixed timestep."""

import argparse

from mhd0.config import load_config
from mhd0.diagnostics import energy_ledger
from mhd0.dynamics import step_rk4
from mhd0.initial_data import generate_initial_data


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default="configs/small_data.cfg")
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--steps", default="32,64,128,256,512", help="comma-separated step counts")
    args = ap.parse_args()
    cfg = load_config(args.config).with_overrides(t_end=args.t_end)
    params = cfg.params()
    s0, report = generate_initial_data(cfg)
    e0 = energy_ledger(s0, params).total
    print(f"C0 = {report.achieved_C0:.6e}, E(0) = {e0:.6e}")
    print(f"{'steps':>6} {'dt':>10} {'residual':>12} {'ratio':>8}")
    prev = None
    for n_steps in (int(x) for x in args.steps.split(",")):
        dt = args.t_end / n_steps
        s = s0
        for _ in range(n_steps):
            s = step_rk4(s, params, dt, dealias=cfg.dealias)
        r = abs(energy_ledger(s, params).total - e0 + s.dissipated)
        ratio = f"{prev / r:8.2f}" if prev else " " * 8
        print(f"{n_steps:6d} {dt:10.3e} {r:12.4e} {ratio}")
        prev = r


if __name__ == "__main__":
    main()
