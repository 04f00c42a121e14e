"""Hand evaluations of the five queue recursions on random single steps.

Values are multiples of 1/8 so every result is exact in binary floating
point, whatever the summation order on the other side.

    python3 oracles/queue_steps.py > crates/cli/tests/data/queue_steps.csv
"""
import random

rng = random.Random(20240607)


def val(hi=400):
    return rng.randint(0, hi * 8) / 8


def pos(x):
    return x if x > 0 else 0.0


print("kind,p0,p1,p2,p3,expected")
for n in range(100):
    kind = ["bank", "ter_mmtc", "ter_urllc", "sat_mmtc", "sat_embb"][n % 5]
    if kind == "bank":
        known = [val() for _ in range(rng.randint(0, 5))]
        b_ter, b_sat, future = val(), val(), val()
        # Integrate backlog: sum of the bank; drained then refilled.
        expected = pos(sum(known) - (b_ter + b_sat)) + future
        print(f"bank,{' '.join(repr(k) for k in known)},{b_ter!r},{b_sat!r},{future!r},{expected!r}")
    else:
        q, serve, drain, inflow = val(), val(), val(), val()
        # Q' = [Q - (serve - drain)]^+ + inflow for every terrestrial and
        # satellite queue; the roles of the columns differ per kind.
        expected = pos(q - (serve - drain)) + inflow
        print(f"{kind},{q!r},{serve!r},{drain!r},{inflow!r},{expected!r}")
