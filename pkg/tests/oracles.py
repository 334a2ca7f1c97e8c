"""Independent brute-force oracles for the five-branch bridge a-b, a-c, b-c, b-d, c-d."""

from memcirc.powerlaw import PowerLawElement, element_i, element_v


def pl(alpha, D):
    return PowerLawElement(alpha, D)


def bisect(f, lo, hi, tol=1e-15):
    # f decreasing on [lo, hi]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def bridge_oracle(alpha, D, V):
    """Input current of the bridge at voltage V by nested bisection on (vb, vc)."""
    def i(k, dv):
        return element_i(pl(alpha, D[k]), dv)

    def vc_of(vb):
        # KCL at c: i_ac + i_bc - i_cd = 0, decreasing in vc
        return bisect(lambda vc: i(1, V - vc) + i(2, vb - vc) - i(4, vc), 0.0, V)

    vb = bisect(lambda vb: i(0, V - vb) - i(2, vb - vc_of(vb)) - i(3, vb), 0.0, V)
    vc = vc_of(vb)
    return i(0, V - vb) + i(1, V - vc)


def bridge_oracle_current(alpha, D, I):
    """Input voltage of the bridge at current I by nested bisection on loop currents.

    For alpha > 1 the branch current is a very flat function of its voltage, so
    bisecting on node voltages cannot resolve the currents; currents are bisected instead.
    """
    def v(k, ib):
        return element_v(pl(alpha, D[k]), ib)

    def y_of(x):
        # loop b-d-c: v_bd - v_cd - v_bc = 0, decreasing in y = i_bc
        return bisect(lambda y: v(3, x - y) - v(4, I - x + y) - v(2, y), -I, I)

    # loop a-b-c: v_ab + v_bc - v_ac = 0, increasing in x = i_ab
    x = bisect(lambda x: -(v(0, x) + v(2, y_of(x)) - v(1, I - x)), -I, 2 * I)
    return v(0, x) + v(3, x - y_of(x))
