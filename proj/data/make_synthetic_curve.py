#!/usr/bin/env python3
"""Generate data/synthetic_curve.14c, the synthetic calibration curve used by
tests and demos.

This is NOT a real calibration curve.  It is a smooth fiction with the
qualitative features the test suite needs from a curve:

  * a steep, informative stretch around 2050-2110 cal BP, so a phase boundary
    near 2100 can be localised sharply;
  * a slowdown over ~2120-2230 followed by a mild reversal near 2230-2300
    whose trough approaches (but stays above) the 2141 14C level: a
    determination of 2141 +/- 30 14C yr then calibrates to a dominant mode
    near 2100 plus a distinct secondary mode near the trough, >100 cal yr
    away, while carrying only a modest share of the total mass there (real
    curves behave this way; a deeper reversal would let the secondary branch
    dominate joint fits);
  * a plateau around 1960 cal BP that smears young-side calibration;
  * mild long-period wiggles beyond 2600 cal BP, monotone trend elsewhere.

The curve is defined through its slope field d(14C age)/d(cal age), integrated
on a 1-yr lattice and sampled at 5-yr knots over 1500..7000 cal BP.  The level
is pinned so that the 14C age at 2100 cal BP is exactly 2141.0, and the dip
amplitude is tuned so the trough sits a fixed distance above 2141.

Running this script regenerates the file deterministically and asserts the
features above actually hold.
"""

import math
import numpy as np

START, END = 1500, 7000
KNOT_STEP = 5
# pointwise height of the secondary 2141+/-30 mode relative to the main one;
# large enough to be unmistakable, small enough that the secondary branch
# carries only a modest share of the calibration mass
PEAK_RATIO_TARGET = 0.30


def gauss(theta, centre, width):
    return np.exp(-((theta - centre) ** 2) / (2.0 * width**2))


def slope(theta, dip_amp):
    s = np.full_like(theta, 0.92, dtype=float)
    s += 0.55 * gauss(theta, 2095.0, 26.0)      # steep informative stretch
    s -= 0.50 * gauss(theta, 2168.0, 55.0)      # slowdown before the reversal
    s -= dip_amp * gauss(theta, 2245.0, 14.0)   # the reversal itself
    s -= 0.55 * gauss(theta, 1958.0, 22.0)      # young-side plateau
    window = 1.0 / (1.0 + np.exp(-(theta - 2600.0) / 40.0))
    s += 0.15 * np.sin(2.0 * math.pi * theta / 620.0) * window
    return s


def curve_error(theta):
    return 6.5 + 1.8 * np.sin(2.0 * math.pi * theta / 900.0 + 0.7)


def integrate(dip_amp):
    theta = np.arange(START, END + 1, 1, dtype=float)
    # midpoint rule on the 1-yr lattice
    mid = 0.5 * (theta[:-1] + theta[1:])
    c14 = np.concatenate([[0.0], np.cumsum(slope(mid, dip_amp))])
    # pin level: 14C age at cal 2100 is exactly 2141
    c14 += 2141.0 - c14[int(2100 - START)]
    return theta, c14


def secondary_ratio(theta, c14, tau):
    # height of the old-side 2141+/-30 density mode relative to the global max
    grid = np.arange(1800.5, 2500.0, 1.0)
    dens = density_for(2141.0, 30.0, theta, c14, tau, grid)
    old_side = dens[grid > 2200.0]
    interior = [
        old_side[j]
        for j in range(1, len(old_side) - 1)
        if old_side[j] > old_side[j - 1] and old_side[j] >= old_side[j + 1]
    ]
    return max(interior) / dens.max() if interior else 0.0


def build():
    # bisect the dip amplitude to hit the secondary-mode height target
    # (a deeper reversal raises the old-side mode monotonically)
    lo, hi = 0.8, 4.0
    tau = None
    for _ in range(60):
        mid_amp = 0.5 * (lo + hi)
        theta, c14 = integrate(mid_amp)
        if tau is None:
            tau = curve_error(theta)
        if secondary_ratio(theta, c14, tau) < PEAK_RATIO_TARGET:
            lo = mid_amp
        else:
            hi = mid_amp
    dip_amp = 0.5 * (lo + hi)
    theta, c14 = integrate(dip_amp)
    return theta, c14, curve_error(theta), dip_amp


def density_for(x, sigma, theta, c14, tau, grid):
    m = np.interp(grid, theta, c14)
    var = sigma**2 + np.interp(grid, theta, tau) ** 2
    dens = np.exp(-0.5 * (x - m) ** 2 / var) / np.sqrt(var)
    return dens / dens.sum()


def peak_positions(grid, dens, rel):
    return [
        grid[j]
        for j in range(1, len(grid) - 1)
        if dens[j] > dens[j - 1] and dens[j] >= dens[j + 1] and dens[j] > rel * dens.max()
    ]


def echo_share(grid, dens, split):
    return dens[grid > split].sum()


def check(theta, c14, tau):
    def mu(t):
        return float(np.interp(t, theta, c14))

    assert abs(mu(2100.0) - 2141.0) < 1e-9

    ratio = secondary_ratio(theta, c14, tau)
    assert abs(ratio - PEAK_RATIO_TARGET) < 0.02, ratio

    # monotone outside the engineered features
    d = np.diff(c14)
    feat = ((theta[:-1] > 1920) & (theta[:-1] < 2005)) | (
        (theta[:-1] > 2215) & (theta[:-1] < 2300)
    )
    assert d[~feat].min() > 0.15, d[~feat].min()

    assert 4.0 < tau.min() and tau.max() < 9.0

    # the single-determination pathology: 2141 +/- 30 yields >= 2 local maxima
    # separated by > 100 cal yr, with the secondary peak prominent...
    grid = np.arange(1800.5, 2500.0, 1.0)
    dens = density_for(2141.0, 30.0, theta, c14, tau, grid)
    peaks = peak_positions(grid, dens, 0.2)
    assert len(peaks) >= 2, peaks
    assert max(peaks) - min(peaks) > 100, peaks

    # ...but carrying only a modest share of the total mass, and next to none
    # for determinations at or below the phase's typical 14C level
    share_2141 = echo_share(grid, dens, 2200.0)
    assert 0.05 < share_2141 < 0.30, share_2141
    share_2110 = echo_share(grid, density_for(2110.0, 30.0, theta, c14, tau, grid), 2200.0)
    assert share_2110 < 0.06, share_2110
    share_2080 = echo_share(grid, density_for(2080.0, 30.0, theta, c14, tau, grid), 2200.0)
    assert share_2080 < 0.02, share_2080

    print(
        f"checks passed; secondary ratio {ratio:.3f}, 2141+/-30 peaks at "
        f"{[f'{p:.0f}' for p in peaks]}, echo shares "
        f"{share_2141:.3f}/{share_2110:.3f}/{share_2080:.3f}"
    )


def main():
    theta, c14, tau, dip_amp = build()
    print(f"dip amplitude {dip_amp:.4f}")
    check(theta, c14, tau)
    knots = np.arange(START, END + 1, KNOT_STEP, dtype=int)
    idx = knots - START
    lines = [
        "# Synthetic calibration curve for the c14rate test suite and demos.",
        "# Not real data: generated by data/make_synthetic_curve.py.",
        "# CAL BP, 14C age, Sigma 14C",
    ]
    # oldest first, matching the usual distribution order of .14c files
    for j in idx[::-1]:
        lines.append(f"{int(theta[j])},{c14[j]:.1f},{tau[j]:.1f}")
    with open("synthetic_curve.14c", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote synthetic_curve.14c ({len(idx)} knots)")


if __name__ == "__main__":
    main()
