#!/usr/bin/env python3
"""Write b-file fixtures for the OEIS triangles used in tests.

Every triangle comes from a closed form, a coefficient-level recurrence or a
power-series computation that is independent of the polynomial recurrences
in the Rust code. Small rows are cross-checked by brute-force enumeration.
"""

import hashlib
import itertools
import math
import sys
from fractions import Fraction
from pathlib import Path

ROWS = 30


def eulerian_row(n):
    # A(n, k) = sum_j (-1)^j C(n+1, j) (k+1-j)^n, 0 <= k < n
    return [sum((-1) ** j * math.comb(n + 1, j) * (k + 1 - j) ** n for j in range(k + 2)) for k in range(n)]


def descents(p):
    return sum(1 for a, b in zip(p, p[1:]) if a > b)


def brute_eulerian(n):
    row = [0] * n
    for p in itertools.permutations(range(n)):
        row[descents(p)] += 1
    return row


def type_b_row(n):
    # T(n, k) = sum_j (-1)^(k-1-j) C(n, k-1-j) (2j+1)^(n-1), 1 <= k <= n
    return [
        sum((-1) ** (k - 1 - j) * math.comb(n, k - 1 - j) * (2 * j + 1) ** (n - 1) for j in range(k))
        for k in range(1, n + 1)
    ]


def brute_type_b(m):
    # Signed permutations of [m] by descents with pi(0) = 0; equals row m+1.
    row = [0] * (m + 1)
    for p in itertools.permutations(range(1, m + 1)):
        for signs in itertools.product((1, -1), repeat=m):
            w = [0] + [s * x for s, x in zip(signs, p)]
            row[descents(w)] += 1
    return row


def second_order_rows(count):
    rows = [[1]]
    for n in range(1, count + 1):
        prev = rows[-1]
        row = []
        for k in range(n):
            a = prev[k] if k < len(prev) else 0
            b = prev[k - 1] if 0 <= k - 1 < len(prev) else 0
            row.append((k + 1) * a + (2 * n - 1 - k) * b)
        rows.append(row)
    return rows


def brute_stirling(n):
    # Stirling permutations of 1,1,...,n,n counted by descents (a trailing 0 appended).
    row = [0] * n
    seen = set()
    for p in itertools.permutations([i for i in range(1, n + 1) for _ in range(2)]):
        if p in seen:
            continue
        seen.add(p)
        ok = True
        for i in range(1, n + 1):
            a = p.index(i)
            b = len(p) - 1 - p[::-1].index(i)
            if any(x < i for x in p[a:b]):
                ok = False
                break
        if ok:
            row[descents(list(p) + [0]) - 1] += 1
    return row


def derangements(m):
    return sum((-1) ** j * math.factorial(m) // math.factorial(j) for j in range(m + 1))


def rencontres_row(n):
    return [math.comb(n, k) * derangements(n - k) for k in range(n + 1)]


def brute_rencontres(n):
    row = [0] * (n + 1)
    for p in itertools.permutations(range(n)):
        row[sum(1 for i, x in enumerate(p) if i == x)] += 1
    return row


def catalan_leaf_row(n):
    return [Fraction(2 * (k + 1), n + k + 2) * math.comb(2 * n + 1, n - k) for k in range(n + 1)]


def half_normal_row(n):
    return [math.factorial(2 * n - k) // (math.factorial(n - k) * 2 ** (n - k)) for k in range(n + 1)]


def series_mul(a, b, size):
    out = [Fraction(0)] * size
    for i, x in enumerate(a[:size]):
        if x:
            for j, y in enumerate(b[: size - i]):
                out[i + j] += x * y
    return out


def series_inv(a, size):
    out = [Fraction(0)] * size
    out[0] = 1 / Fraction(a[0])
    for n in range(1, size):
        out[n] = -sum(a[j] * out[n - j] for j in range(1, min(n, len(a) - 1) + 1)) / a[0]
    return out


def binomial_series(c, x_coeff, exponent, size):
    # (1 + x_coeff z)^exponent
    out = []
    term = Fraction(1)
    for j in range(size):
        out.append(term)
        term = term * (exponent - j) / (j + 1) * x_coeff
    return out


def hills_rows(count):
    # Dyck paths by hills: sum_n P_n(v) z^n = 1 / (1 - v z - z (C(z) - 1))
    size = count + 2
    cat = [Fraction(math.comb(2 * j, j), j + 1) for j in range(size)]
    rows = []
    for n in range(count + 1):
        rows.append([0] * (n + 1))
    # Expand as a series in z whose coefficients are polynomials in v.
    # 1/(1 - u) with u = v z + z (C - 1)
    u = {}  # (power of z) -> {power of v: coeff}
    u[1] = {1: Fraction(1)}
    for j in range(1, size):
        u.setdefault(j + 1, {})
        u[j + 1][0] = u[j + 1].get(0, Fraction(0)) + cat[j]
    total = {0: {0: Fraction(1)}}
    power = {0: {0: Fraction(1)}}
    for _ in range(count + 1):
        nxt = {}
        for zi, pv in power.items():
            for zj, qv in u.items():
                if zi + zj > count:
                    continue
                d = nxt.setdefault(zi + zj, {})
                for vi, x in pv.items():
                    for vj, y in qv.items():
                        d[vi + vj] = d.get(vi + vj, Fraction(0)) + x * y
        power = nxt
        for zi, pv in power.items():
            d = total.setdefault(zi, {})
            for vi, x in pv.items():
                d[vi] = d.get(vi, Fraction(0)) + x
    for n in range(count + 1):
        for k, x in total.get(n, {}).items():
            rows[n][k] = x
    return rows


def brute_hills(n):
    row = [0] * (n + 1)
    for steps in itertools.product((1, -1), repeat=2 * n):
        h, ok, hills = 0, True, 0
        for i, s in enumerate(steps):
            h += s
            if h < 0:
                ok = False
                break
            if s == -1 and h == 0 and steps[i - 1] == 1:
                hills += 1
        if ok and h == 0:
            row[hills] += 1
    return row


def mittag_rows(count):
    # [v^k] P_n = [z^(n+1)] ((1 - s) / (1 + s))^(k+1), s = (1 - 8z)^(1/4)
    size = count + 2
    s = binomial_series(1, Fraction(-8), Fraction(1, 4), size)
    num = [-x for x in s]
    num[0] += 1
    den = list(s)
    den[0] += 1
    f = series_mul(num, series_inv(den, size), size)
    rows = [[0] * (n + 1) for n in range(count + 1)]
    power = [Fraction(1)] + [Fraction(0)] * (size - 1)
    for k in range(count + 1):
        power = series_mul(power, f, size)
        for n in range(k, count + 1):
            rows[n][k] = power[n + 1]
    return rows


def two_type_row(n):
    return [math.factorial(n) * (k + 1) * (n + 1 - k) for k in range(n + 1)]


def alternating_rows(count):
    # Coefficient form of the parity-dependent recurrence, P_1 = v.
    rows = {1: [0, 1]}
    for n in range(2, count + 1):
        prev = rows[n - 1] + [0]
        row = [0] * (n + 1)
        for k in range(n + 1):
            a = prev[k] if k < len(prev) else 0
            b = prev[k - 1] if k >= 1 else 0
            if n % 2 == 0:
                row[k] = (k - 1) * a + (n - k + 1) * b
            else:
                row[k] = k * a + (n - k) * b
        rows[n] = row
    return rows


def as_int(x):
    x = Fraction(x)
    assert x.denominator == 1, x
    return int(x)


def write(out, name, title, rows, first_index):
    lines = [f"# {name}: {title}", "# generated by tools/gen_fixtures.py"]
    idx = first_index
    for row in rows:
        for x in row:
            lines.append(f"{idx} {as_int(x)}")
            idx += 1
    text = "\n".join(lines) + "\n"
    path = out / f"b{name[1:]}.txt"
    path.write_text(text)
    return path


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/oeis"
    out.mkdir(parents=True, exist_ok=True)

    for n in range(1, 8):
        assert eulerian_row(n) == brute_eulerian(n)
    for m in range(0, 5):
        assert type_b_row(m + 1) == brute_type_b(m)
    so = second_order_rows(ROWS)
    for n in range(1, 6):
        assert so[n] == brute_stirling(n), (n, so[n], brute_stirling(n))
    for n in range(0, 8):
        assert rencontres_row(n) == brute_rencontres(n)
    hills = hills_rows(ROWS)
    for n in range(0, 9):
        assert [as_int(x) for x in hills[n]] == brute_hills(n)
    alt = alternating_rows(ROWS)
    for n in range(1, ROWS + 1):
        assert sum(alt[n]) == math.factorial(n - 1)

    paths = [
        write(out, "A008292", "Eulerian numbers, rows n >= 1, 1 <= k <= n", [eulerian_row(n) for n in range(1, ROWS + 1)], 1),
        write(out, "A173018", "Eulerian numbers, rows n >= 0, 0 <= k <= n", [eulerian_row(n) + [0] if n else [1] for n in range(0, ROWS)], 0),
        write(out, "A060187", "type B Eulerian numbers", [type_b_row(n) for n in range(1, ROWS + 1)], 1),
        write(out, "A008517", "second-order Eulerian numbers", so[1 : ROWS + 1], 1),
        write(out, "A008290", "rencontres numbers", [rencontres_row(n) for n in range(0, ROWS)], 0),
        write(out, "A039598", "Catalan triangle, odd columns", [catalan_leaf_row(n) for n in range(0, ROWS)], 0),
        write(out, "A193229", "(2n-k)! / ((n-k)! 2^(n-k))", [half_normal_row(n) for n in range(0, ROWS)], 0),
        write(out, "A065600", "Dyck paths by hills", hills[:ROWS], 0),
        write(out, "A091441", "two-type cycle permutations, k(n-k)(n-2)!", [two_type_row(n) for n in range(0, ROWS)], 2),
        write(out, "A202550", "[z^n] ((1-(1-8z)^(1/4))/(1+(1-8z)^(1/4)))^k", mittag_rows(ROWS - 1), 1),
        write(out, "A244312", "parity-alternating Eulerian-type triangle", [alt[n][1:] for n in range(1, ROWS + 1)], 1),
    ]
    sums = []
    for p in sorted(paths):
        digest = hashlib.sha256(p.read_bytes()).hexdigest()
        sums.append(f"{digest}  {p.name}")
    (out / "SHA256SUMS").write_text("\n".join(sums) + "\n")
    print(f"wrote {len(paths)} fixtures to {out}")


if __name__ == "__main__":
    main()
