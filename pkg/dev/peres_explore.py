"""Dev exploration: structure of the Peres 33-ray set over Q[sqrt2].

Questions: how many full orthogonal triads live inside the 33 rays, is the
triads-only coloring problem SAT, and what does cross-product completion of
the remaining orthogonal dyads add?
"""

from fractions import Fraction
from itertools import combinations, product


class Q2:
    """p + q*sqrt(2) with rational p, q."""

    __slots__ = ("p", "q")

    def __init__(self, p, q=0):
        self.p = Fraction(p)
        self.q = Fraction(q)

    def __add__(self, o):
        return Q2(self.p + o.p, self.q + o.q)

    def __sub__(self, o):
        return Q2(self.p - o.p, self.q - o.q)

    def __mul__(self, o):
        return Q2(self.p * o.p + 2 * self.q * o.q, self.p * o.q + self.q * o.p)

    def __neg__(self):
        return Q2(-self.p, -self.q)

    def is_zero(self):
        return self.p == 0 and self.q == 0

    def __eq__(self, o):
        return self.p == o.p and self.q == o.q

    def __hash__(self):
        return hash((self.p, self.q))

    def sign(self):
        if self.p == 0 and self.q == 0:
            return 0
        if self.p >= 0 and self.q >= 0:
            return 1
        if self.p <= 0 and self.q <= 0:
            return -1
        # p, q of opposite sign: compare p^2 vs 2 q^2
        if self.p > 0:
            return 1 if self.p * self.p > 2 * self.q * self.q else -1
        return -1 if self.p * self.p > 2 * self.q * self.q else 1

    def __float__(self):
        return float(self.p) + float(self.q) * 2**0.5

    def __repr__(self):
        return f"({self.p}+{self.q}r2)"


def dot(u, v):
    s = Q2(0)
    for a, b in zip(u, v):
        s = s + a * b
    return s


def cross(u, v):
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def canon(v):
    """Scale to primitive integouerish form and fix overall sign."""
    # clear denominators
    dens = [c.p.denominator for c in v] + [c.q.denominator for c in v]
    from math import lcm, gcd

    m = lcm(*dens)
    v = tuple(Q2(c.p * m, c.q * m) for c in v)
    nums = [abs(c.p.numerator) for c in v] + [abs(c.q.numerator) for c in v]
    nums = [x for x in nums if x]
    g = 0
    for x in nums:
        g = gcd(g, x)
    if g > 1:
        v = tuple(Q2(Fraction(c.p, g), Fraction(c.q, g)) for c in v)
    # if all components are pure multiples of sqrt2, divide by sqrt2: (0 + q r2)/r2 = q
    while all(c.p % 2 == 0 and True for c in v) and all(c.p == 0 or c.q == 0 for c in v):
        if all(c.p == 0 for c in v if not c.is_zero()):
            v = tuple(Q2(c.q * 2, 0) for c in v)  # q*r2 * r2 = 2q ... then /2 below
            # renormalize gcd
            g = 0
            for c in v:
                g = gcd(g, abs(c.p.numerator))
            if g > 1:
                v = tuple(Q2(Fraction(c.p, g), c.q) for c in v)
            continue
        break
    for c in v:
        s = c.sign()
        if s > 0:
            return v
        if s < 0:
            return tuple(-x for x in v)
    return v


def build_peres33():
    rays = set()
    Z, O, R = Q2(0), Q2(1), Q2(0, 1)  # 0, 1, sqrt2
    # axes
    for i in range(3):
        v = [Z, Z, Z]
        v[i] = O
        rays.add(canon(tuple(v)))
    # (1, +-1, 0) type
    for i, j in combinations(range(3), 2):
        for s in (1, -1):
            v = [Z, Z, Z]
            v[i] = O
            v[j] = O if s == 1 else -O
            rays.add(canon(tuple(v)))
    # (0, 1, +-sqrt2) type: one zero, one 1, one sqrt2
    for zero in range(3):
        others = [i for i in range(3) if i != zero]
        for oneat, r2at in (others, others[::-1]):
            for s in (1, -1):
                v = [Z, Z, Z]
                v[oneat] = O
                v[r2at] = R if s == 1 else -R
                rays.add(canon(tuple(v)))
    # (+-1, +-1, sqrt2) type: sqrt2 in each position
    for r2at in range(3):
        others = [i for i in range(3) if i != r2at]
        for s1, s2 in product((1, -1), repeat=2):
            v = [Z, Z, Z]
            v[r2at] = R
            v[others[0]] = O if s1 == 1 else -O
            v[others[1]] = O if s2 == 1 else -O
            rays.add(canon(tuple(v)))
    return sorted(rays, key=lambda v: str(v))


def orthogonal_pairs(rays):
    return [
        (i, j)
        for i, j in combinations(range(len(rays)), 2)
        if dot(rays[i], rays[j]).is_zero()
    ]


def triads(rays, pairs):
    pairset = set(pairs)
    out = []
    for i, j in pairs:
        for k in range(j + 1, len(rays)):
            if (i, k) in pairset and (j, k) in pairset:
                out.append((i, j, k))
    return out


def solve_exactly_one(n_rays, bases, count_limit=2):
    """Tiny backtracking: exactly one marked ray per basis. Returns number of
    solutions found up to count_limit."""
    colors = [-1] * n_rays
    solutions = []

    def basis_state(b):
        vals = [colors[r] for r in b]
        ones = vals.count(1)
        zeros = vals.count(0)
        return ones, zeros

    def propagate():
        changed = True
        while changed:
            changed = False
            for b in bases:
                ones, zeros = basis_state(b)
                if ones > 1 or zeros == 3:
                    return False
                if ones == 1:
                    for r in b:
                        if colors[r] == -1:
                            colors[r] = 0
                            changed = True
                if ones == 0 and zeros == 2:
                    for r in b:
                        if colors[r] == -1:
                            colors[r] = 1
                            changed = True
        return True

    def rec():
        if len(solutions) >= count_limit:
            return
        snapshot = colors[:]
        if not propagate():
            colors[:] = snapshot
            return
        try:
            idx = colors.index(-1)
        except ValueError:
            solutions.append(colors[:])
            colors[:] = snapshot
            return
        for val in (1, 0):
            colors[idx] = val
            rec()
            if len(solutions) >= count_limit:
                break
            # reset to post-snapshot state
            post = colors[:]
            colors[:] = snapshot
            colors[idx] = val if False else -1
            # actually need full reset: redo
        colors[:] = snapshot

    # simpler correct recursion
    import sys

    sys.setrecursionlimit(10000)

    def rec2(assignment):
        if len(solutions) >= count_limit:
            return
        # propagate on a copy
        col = assignment[:]

        def prop():
            changed = True
            while changed:
                changed = False
                for b in bases:
                    vals = [col[r] for r in b]
                    ones = vals.count(1)
                    zeros = vals.count(0)
                    if ones > 1 or zeros == 3:
                        return False
                    if ones == 1:
                        for r in b:
                            if col[r] == -1:
                                col[r] = 0
                                changed = True
                    elif zeros == 2:
                        for r in b:
                            if col[r] == -1:
                                col[r] = 1
                                changed = True
            return True

        if not prop():
            return
        if -1 not in col:
            solutions.append(col)
            return
        idx = col.index(-1)
        for val in (1, 0):
            nxt = col[:]
            nxt[idx] = val
            rec2(nxt)

    rec2(colors)
    return solutions


rays = build_peres33()
print("rays:", len(rays))
pairs = orthogonal_pairs(rays)
print("orthogonal pairs:", len(pairs))
tri = triads(rays, pairs)
print("full triads within set:", len(tri))

sols = solve_exactly_one(len(rays), tri, count_limit=1)
print("triads-only SAT?" , "SAT" if sols else "UNSAT")

# complete dyads not inside any triad
in_triad = set()
for a, b, c in tri:
    in_triad |= {(a, b), (a, c), (b, c)}
missing = [p for p in pairs if p not in in_triad]
print("dyads needing completion:", len(missing))

ray_index = {r: i for i, r in enumerate(rays)}
new_rays = {}
ext_bases = list(tri)
all_rays = list(rays)
for i, j in missing:
    w = canon(cross(all_rays[i], all_rays[j]))
    if w in ray_index:
        k = ray_index[w]
    elif w in new_rays:
        k = new_rays[w]
    else:
        k = len(all_rays)
        all_rays.append(w)
        new_rays[w] = k
        ray_index[w] = k
    ext_bases.append(tuple(sorted((i, j, k))))
print("completion rays added:", len(new_rays), "-> total rays", len(all_rays))
print("total bases after completion:", len(ext_bases))
sols = solve_exactly_one(len(all_rays), ext_bases, count_limit=1)
print("completed problem:", "SAT" if sols else "UNSAT")
print("sample completions:", list(new_rays)[:6])
