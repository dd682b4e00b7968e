"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Times the conjugate-angle maximisation over a wavelength scan (the inner loop
of the bandwidth extraction) and the gate classification of one simulated
calibration run, checks both backends agree, and prints the speed-up.
"""
import argparse
import math
import timeit

import numpy as np

from heraldkit import _pykernels
from heraldkit.dispersion import CrystalSpec, load_sellmeier, omega_from_nm
from heraldkit.phasematching import PumpSpec, solve_central

try:
    from heraldkit import _ckernels
except ImportError:
    _ckernels = None


def scan_inputs(n_wl=400):
    crystal = CrystalSpec(5e-3, 7.36e-6, 131.0, load_sellmeier("jundt1997_congruent_e"))
    pump = PumpSpec(532.0, 144e-6)
    sol = solve_central(crystal, pump, math.radians(1.0))
    lam = np.linspace(sol.lambda_s - 4.0, sol.lambda_s + 4.0, n_wl)
    om_s = omega_from_nm(lam)
    om_i = pump.omega - om_s
    k_s = crystal.wavenumber(om_s)
    k_i = crystal.wavenumber(om_i)
    kp_eff = float(crystal.wavenumber(pump.omega)) - crystal.grating_vector
    theta_s = np.full(n_wl, sol.theta_s_int)
    args = (kp_eff, k_s, theta_s, k_i, crystal.half_length, pump.waist, sol.theta_i_int, 0.05)
    return args


def gate_inputs(n=430_000, seed=1):
    rng = np.random.default_rng(seed)
    return (rng.random(n), rng.exponential(1e-6, n), rng.random(n), 0.05, 0.025, 20e-9)


def bench(name, fn, args, repeat):
    t = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
    print(f"  {name:<8}{t * 1e3:10.2f} ms")
    return t


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    opts = ap.parse_args()
    cases = [
        ("max_phi_conjugate_many (400 wavelengths)", "max_phi_conjugate_many", scan_inputs()),
        ("gate_outcomes (430k heralds)", "gate_outcomes", gate_inputs()),
    ]
    for title, fname, args in cases:
        print(title)
        t_py = bench("python", getattr(_pykernels, fname), args, opts.repeat)
        if _ckernels is None:
            print("  cython  not built")
            continue
        t_c = bench("cython", getattr(_ckernels, fname), args, opts.repeat)
        ref = getattr(_pykernels, fname)(*args)
        got = getattr(_ckernels, fname)(*args)
        same = all(np.allclose(a, b, rtol=1e-12, atol=0) for a, b in zip(ref, got))
        print(f"  speed-up {t_py / t_c:6.1f}x   outputs agree: {same}")


if __name__ == "__main__":
    main()
