"""Smoke test for the semigroup_lab_py extension.

Build it first:  cargo build --release -p semigroup-lab-py
then copy target/release/libsemigroup_lab_py.so next to this file as
semigroup_lab_py.so (see README), or install with maturin.
"""

import cmath
import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import semigroup_lab_py as lab


def check_two_point():
    a = lab.Generator.diagonal([0, 2])
    phi = lab.Functional([0.5, 0.5])
    x = [1, 1]
    assert phi.pairing(a.apply(x)) == 1
    log_value, value, cm1 = lab.scalar_trotter_value(a, phi, x, 2**20)
    assert abs(cmath.exp(log_value) - math.e) < 1e-3
    assert abs(value - math.e) < 1e-3
    n = 64
    closed = (math.exp(2 / n) - 1) / 2
    assert abs(lab.scalar_trotter_value(a, phi, x, n)[2] - closed) < 1e-15
    dense = lab.dense_trotter_pairing(a, phi, x, 256)
    scalar = lab.scalar_trotter_value(a, phi, x, 256)[1]
    assert abs(dense - scalar) / abs(scalar) < 1e-9


def check_witness():
    d = 96
    a = lab.Generator.double_exp(d, 0.005, 1.05)
    phi = lab.Functional.geometric(d, 1.0, 0.95)
    cert = lab.build_certificate(a, phi, eps=0.1, k=5)
    cert.verify()
    moduli = cert.final_moduli()
    assert moduli[5] >= math.exp(5) - 0.2, moduli
    lambdas = [l for _, l in cert.lambda_lower_bounds()]
    assert all(b > a for a, b in zip(lambdas, lambdas[1:]))
    assert lambdas[5] - lambdas[0] >= 4.5

    back = lab.Certificate.from_json(cert.to_json())
    back.verify()
    assert back.n == cert.n and back.n[5] > 2**64

    y = cert.y
    assert abs(lab.norm0(y, phi, y) - math.sqrt(sum(abs(c) ** 2 for c in y))) < 1e-12

    doc = json.loads(cert.to_json())
    mant, exp = doc["final_values"][4]["value"][0].split("p")
    mant = mant[:-1] + ("3" if mant[-1] == "1" else "1")
    doc["final_values"][4]["value"][0] = f"{mant}p{exp}"
    try:
        lab.Certificate.from_json(json.dumps(doc)).verify()
    except lab.LabError as e:
        assert "blow_up" in str(e), e
    else:
        raise AssertionError("tampered certificate verified")


def check_errors():
    try:
        lab.build_certificate(lab.Generator.diagonal([0, 0]), lab.Functional([1, 0]), k=1)
    except lab.LabError as e:
        assert "truncation insufficient" in str(e)
    else:
        raise AssertionError("zero generator built a certificate")


if __name__ == "__main__":
    check_two_point()
    check_witness()
    check_errors()
    print("smoke test passed")
