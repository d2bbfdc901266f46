"""Independent numpy reference values for the acceptance suite.

Run: python3 tools/oracle.py
"""

import numpy as np


def boundary_objective(a1, a2):
    """Lowest eigenvalue of B^2 - A^2 on the family xi = sqrt(a1 a2), b = a2 / (1 - a1)."""
    b = np.minimum(a2 / (1.0 - a1), 1.0)
    xi2 = a1 * a2
    # Entries of B^2 - A^2 for A = [[a1, xi], [xi, a2]], B = diag(1, b).
    m11 = 1.0 - a1 * a1 - xi2
    m22 = b * b - a2 * a2 - xi2
    m12 = -np.sqrt(xi2) * (a1 + a2)
    return 0.5 * (m11 + m22) - np.hypot(0.5 * (m11 - m22), m12)


def fine_scan(step=1e-4):
    best = (np.inf, None, None)
    for a1 in np.arange(1e-6, 1.0 - 1e-6, step):
        a2 = np.arange(0.0, 1.0 - a1 + 1e-15, step)
        vals = boundary_objective(a1, a2)
        i = int(np.argmin(vals))
        if vals[i] < best[0]:
            best = (vals[i], a1, a2[i])
    return best


def golden():
    a1, a2 = 0.724, 0.0854
    b, xi = a2 / (1 - a1), np.sqrt(a1 * a2)
    A = np.array([[a1, xi], [xi, a2]])
    B = np.diag([1.0, b])
    phi = np.array([0.391, 0.920])
    phi /= np.linalg.norm(phi)
    M = B @ B - A @ A
    g0 = phi @ M @ phi
    t = np.trace(M) / 2
    w, v = np.linalg.eigh(A)
    hi = v[:, 1] * np.sign(v[0, 1])
    return {
        "first_gap": phi @ (B - A) @ phi,
        "second_gap": g0,
        "min_eig_B2A2": np.linalg.eigvalsh(M)[0],
        "eig_A": w,
        "hi_vector": hi,
        "P(hi)": (hi @ phi) ** 2,
        "mean_A": phi @ A @ phi,
        "trace_half": t,
        "p_star": g0 / (g0 - t),
        "gap_at_p_0.5": 0.5 * g0 + 0.5 * t,
        "basis_angle_deg": np.degrees(np.arctan2(hi[1], hi[0])),
        "state_angle_deg": np.degrees(np.arctan2(phi[1], phi[0])),
    }


if __name__ == "__main__":
    for k, v in golden().items():
        print(f"{k:>16}: {v}")
    obj, a1, a2 = fine_scan()
    print(f"{'fine scan':>16}: objective={obj:.7f} a1={a1:.5f} a2={a2:.5f} b={a2 / (1 - a1):.5f} xi={np.sqrt(a1 * a2):.5f}")
