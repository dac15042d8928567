import itertools

from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def brute_span(vectors):
    """Every XOR combination of the given masks, as a set."""
    out = {0}
    for v in vectors:
        out |= {u ^ v for u in out}
    return out


def brute_points(n, constraints):
    """Point masks b with parity(Q & b) matching each (Q, value) constraint."""
    pts = []
    for b in range(1 << n):
        if all((-1) ** ((q & b).bit_count() & 1) == val for q, val in constraints):
            pts.append(b)
    return pts


def subsets_upto(n, k):
    for r in range(k + 1):
        for c in itertools.combinations(range(n), r):
            yield sum(1 << i for i in c)
