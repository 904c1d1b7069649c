#!/usr/bin/env python3
"""Generates the budget-arithmetic oracle fixture.

Evaluates the two budget-arithmetic formulas at 50 significant digits
(stdlib decimal) on 1000 random configurations whose inputs are exact f64
values, and freezes inputs plus expected outputs as JSON. The Rust
acceptance suite replays the same inputs through the f64 implementation and
compares at 1e-12 relative error.

Regenerate with:  python3 scripts/gen_budget_fixture.py
Output:           crates/core/tests/fixtures/budget_oracle.json
"""

import json
import random
from decimal import Decimal, getcontext
from pathlib import Path

getcontext().prec = 50

ONE = Decimal(1)


def dec_exp(x: Decimal) -> Decimal:
    return x.exp()


def dec_ln(x: Decimal) -> Decimal:
    return x.ln()


def plr_oracle(eps: float, n: int, lam: float):
    """First/fallback branch arithmetic for a single model."""
    epsd, nd, lamd = Decimal(eps), Decimal(n), Decimal(lam)
    log_term = dec_ln(ONE + ONE / (2 * nd * lamd) + ONE / (16 * nd * nd * lamd * lamd))
    eps_prime = epsd - log_term
    if eps_prime > 0:
        return {"eps_prime": float(eps_prime), "delta": 0.0, "fallback": False}
    delta = ONE / (4 * nd * (dec_exp(epsd / 4) - ONE)) - lamd
    return {
        "eps_prime": float(epsd / 2),
        "delta": float(delta),
        "fallback": True,
        "rejected": delta < 0,
    }


def pstf_oracle(eps: float, n: int, lams, qs):
    epsd, nd = Decimal(eps), Decimal(n)
    log_sum = Decimal(0)
    for lam, q in zip(lams, qs):
        if q == 0.0:
            continue
        lamd, qd = Decimal(lam), Decimal(q)
        q2 = qd * qd
        log_sum += dec_ln(
            ONE + q2 / (2 * nd * lamd) + q2 * q2 / (16 * nd * nd * lamd * lamd)
        )
    eps_prime = epsd - log_sum
    if eps_prime > 0:
        return {
            "eps_prime": float(eps_prime),
            "deltas": [0.0] * len(qs),
            "fallback": False,
        }
    deltas = []
    rejected = False
    for lam, q in zip(lams, qs):
        if q == 0.0:
            deltas.append(0.0)
            continue
        lamd, qd = Decimal(lam), Decimal(q)
        delta = qd * qd / (4 * nd * (dec_exp(epsd * qd / 4) - ONE)) - lamd
        if delta < 0:
            rejected = True
            break
        deltas.append(float(delta))
    return {
        "eps_prime": float(epsd / 2),
        "deltas": deltas,
        "fallback": True,
        "rejected": rejected,
    }


def main():
    rng = random.Random(20260808)
    plr_cases = []
    for _ in range(500):
        # spread over both branches: small eps with small n*lambda hits the
        # fallback, the rest stay in the first branch
        eps = float(10 ** rng.uniform(-3, 1))
        n = rng.randint(1, 100_000)
        lam = float(10 ** rng.uniform(-6, 2))
        case = {"eps": eps, "n": n, "lambda": lam}
        case["expected"] = plr_oracle(eps, n, lam)
        plr_cases.append(case)

    pstf_cases = []
    for _ in range(500):
        eps = float(10 ** rng.uniform(-3, 1))
        n = rng.randint(1, 100_000)
        k = rng.randint(1, 8)
        lams = [float(10 ** rng.uniform(-6, 2)) for _ in range(k)]
        raw = [rng.uniform(0, 1) for _ in range(k)]
        if k > 1 and rng.random() < 0.2:
            raw[rng.randrange(k)] = 0.0
        total = sum(raw)
        qs = [float(r / total) for r in raw]
        # repair rounding through the largest weight so the f64 sum is
        # within the library's gate and no weight can go negative
        big = max(range(k), key=lambda i: qs[i])
        qs[big] = float(1.0 - (sum(qs) - qs[big]))
        case = {"eps": eps, "n": n, "lambdas": lams, "qs": qs}
        case["expected"] = pstf_oracle(eps, n, lams, qs)
        pstf_cases.append(case)

    n_fallback = sum(1 for c in plr_cases if c["expected"]["fallback"]) + sum(
        1 for c in pstf_cases if c["expected"]["fallback"]
    )
    n_rejected = sum(1 for c in pstf_cases if c["expected"].get("rejected"))
    out = {
        "generator": "scripts/gen_budget_fixture.py",
        "precision_digits": 50,
        "plr": plr_cases,
        "pstf": pstf_cases,
    }
    path = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/budget_oracle.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=1))
    print(
        f"wrote {path} ({len(plr_cases)} plr + {len(pstf_cases)} pstf cases, "
        f"{n_fallback} fallback, {n_rejected} rejected)"
    )


if __name__ == "__main__":
    main()
