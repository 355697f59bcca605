"""Smoke test for the pysemidirac extension module.

Build and install first, e.g. `maturin build --release -m crates/py/Cargo.toml`
followed by `pip install` of the produced wheel.
"""

import json
import math
import os
import tempfile

import pysemidirac as sd


def main():
    m = sd.LatticeModel.honeycomb(beta1=1.0)
    lo, hi = m.bands(0.0, 0.0)
    assert abs(hi - 3.0) < 1e-12 and abs(lo + 3.0) < 1e-12
    assert len(m.dirac_points()) == 2
    cone = m.cone_parameters()
    assert cone["vtilde"] == 0.0

    grid = sd.BandGrid(m, 64)
    centers, dens = grid.density_of_states(200)
    width = centers[1] - centers[0]
    assert abs(sum(dens) * width - 2.0) < 1e-9

    sigma = grid.self_energy(complex(0.0, 1e-6), 0.1)
    assert abs(sigma) < 1e-3 * 0.01
    assert abs(grid.bound_state_energy(0.0, 0.2)) < 1e-8
    r0, cut = grid.bound_state(0.0, 0.1)
    assert 0.0 < r0 <= 1.0 and len(cut) > 0

    times, pops = grid.evolve(t_max=2.0, dt=0.01, g=0.0)
    assert all(abs(p - 1.0) < 1e-12 for p in pops[0])

    kind, e1, e2 = sd.classify_lattice(sd.LatticeModel.honeycomb(beta1=2.0), (-math.pi, -math.pi))
    assert kind == "SemiDirac", kind

    gamma, k, mpt = sd.array_points(0.15)
    bands = sd.array_bands(0.15, 1.0, [k], shells=20, certify=False)
    omegas = bands[0][2]
    assert len(omegas) == 6

    with tempfile.TemporaryDirectory() as out:
        cfg = {"command": "dos", "model": {"variant": "AnisotropicHoneycomb", "beta1": 2}, "grid": {"N1": 32, "N2": 32}}
        assert sd.run_config(json.dumps(cfg), out) == 0
        assert os.path.exists(os.path.join(out, "dos.csv"))

    print("pysemidirac smoke test passed")


if __name__ == "__main__":
    main()
