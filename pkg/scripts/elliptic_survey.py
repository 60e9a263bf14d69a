"""Ratios of the elliptic and interpolation inequalities along a run (constant-free, so only trends matter)."""

import argparse

from mhd0.config import load_config
from mhd0.diagnostics import elliptic_norm_report, sobolev_ratio
from mhd0.dynamics import cfl_dt, rhs, step_rk4
from mhd0.initial_data import generate_initial_data


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default="configs/small_data.cfg")
    ap.add_argument("--samples", type=int, default=6)
    ap.add_argument("--every", type=int, default=10)
    args = ap.parse_args()
    cfg = load_config(args.config)
    params = cfg.params()
    s, _ = generate_initial_data(cfg)
    print(f"{'t':>8} {'lap u':>10} {'D3 u':>10} {'grad F':>10} {'L3':>8} {'L4':>8} {'L6':>8}")
    for _ in range(args.samples):
        d = rhs(s, params, dealias=cfg.dealias)
        rep = elliptic_norm_report(s, d, params)
        rho = s.rho - params.rho_tilde
        lp = [sobolev_ratio(s.grid, rho, r) for r in (3, 4, 6)]
        print(f"{s.t:8.3f} {rep['ratio_lap_u']:10.3e} {rep['ratio_D3u']:10.3e} {rep['ratio_grad_F']:10.3e} "
              + " ".join(f"{x:8.4f}" for x in lp))
        for _ in range(args.every):
            s = step_rk4(s, params, cfl_dt(s, params, cfg.cfl, cfg.visc_cfl), dealias=cfg.dealias)


if __name__ == "__main__":
    main()
