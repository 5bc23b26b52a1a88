#!/usr/bin/env python3
"""Import the compiled extension and spot-check the physics.

Build the module first:

    cargo build --release -p bosechain-py

The cdylib lands in target/<profile>/ as libbosechain_py.so (or
bosechain_py.dll / libbosechain_py.dylib); this script copies it next to a
temp dir under the importable name and runs a few assertions end to end.
"""

import cmath
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent

CANDIDATES = [
    ("target/release/libbosechain_py.so", "bosechain_py.so"),
    ("target/debug/libbosechain_py.so", "bosechain_py.so"),
    ("target/release/libbosechain_py.dylib", "bosechain_py.so"),
    ("target/debug/libbosechain_py.dylib", "bosechain_py.so"),
    ("target/release/bosechain_py.dll", "bosechain_py.pyd"),
    ("target/debug/bosechain_py.dll", "bosechain_py.pyd"),
]


def import_module():
    for rel, importable in CANDIDATES:
        built = REPO / rel
        if built.exists():
            stage = Path(tempfile.mkdtemp(prefix="bosechain-py-"))
            shutil.copy2(built, stage / importable)
            sys.path.insert(0, str(stage))
            import bosechain_py

            return bosechain_py
    sys.exit(
        "no built extension found; run `cargo build --release -p bosechain-py` first"
    )


def isclose(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    bc = import_module()

    # Z4 arrival signature
    assert bc.signature(5) == 1
    assert isclose(bc.signature(8), 1j)
    for n in range(1, 13):
        want = cmath.exp(-1j * math.pi * (n - 1) / 2)
        assert isclose(bc.signature(n), want, 1e-12), n

    # engineered couplings are mirror symmetric and scale with J
    ck = bc.krawtchouk_couplings(6, 2.0)
    assert len(ck) == 5
    assert all(isclose(ck[i], ck[-1 - i], 1e-12) for i in range(5))
    assert isclose(ck[0], 2.0 * 0.5 * math.sqrt(5), 1e-12)

    # d-matrix rows are orthonormal (unitarity of the rotation)
    l2 = 6  # l = 3
    for two_mp in range(-l2, l2 + 1, 2):
        s = sum(
            bc.wigner_small_d(l2, two_mp, two_m, 0.7) ** 2
            for two_m in range(-l2, l2 + 1, 2)
        )
        assert isclose(s, 1.0, 1e-12), two_mp

    # analytic propagator at the mirror time is the anti-diagonal signature
    n = 5
    u = bc.analytic_propagator(n, 1.0, math.pi)
    r = bc.signature(n)
    for kp in range(n):
        for k in range(n):
            want = r if kp == n - 1 - k else 0.0
            assert isclose(u[kp][k], want, 1e-12), (kp, k)

    # function transfer across the engineered chain
    chain = bc.Chain.engineered(5)
    assert chain.is_pst_profile
    assert isclose(chain.t0, math.pi, 1e-15)
    rep = bc.run_transfer(chain, "0.6*x1^2 + 0.8*x2^2")
    assert isclose(rep["fidelity"], 1.0), rep["fidelity"]
    assert rep["phase_error"] < 1e-9
    assert rep["mirror_function"] == "0.6*x5^2 + 0.8*x4^2"
    assert rep["mirror_law_exact"]

    # the mirrored polynomial picks up the signature phase per degree
    assert bc.mirror_function("x1", 4) == "[0,1]*x4"
    assert bc.mirror_function("x1^2", 4) == "-1*x4^2"

    # dressed transfer stays within its truncation budget
    drep = bc.run_dressed_transfer(
        bc.Chain.engineered(3), "x1", 6, displacement=0.25
    )
    assert drep["truncation_loss"] < 1e-6
    assert drep["fidelity"] > 1 - 1e-6

    # two-path interference: N = 5, 8 gives factor 2
    prof = bc.run_interference([5, 8])
    assert isclose(prof["interference_factor"], 2.0), prof["interference_factor"]
    assert isclose(prof["per_path_signature"][0], 1.0, 1e-12)
    assert isclose(prof["per_path_signature"][1], 1j, 1e-12)

    # destructive pair
    prof = bc.run_interference([5, 7])
    assert prof["interference_factor"] < 1e-9

    print("smoke test passed")


if __name__ == "__main__":
    main()
