"""C^4 smoothstep used by the plateau coefficient and the virial cutoffs."""

import numpy as np
from numpy.polynomial import Polynomial

# 6 x^5 ... style ramp of degree 9: S(0)=0, S(1)=1, derivatives 1..4 vanish at both ends
SMOOTHSTEP = Polynomial([0, 0, 0, 0, 0, 126, -420, 540, -315, 70])


def smoothstep(t, order=0):
    """Evaluate the ``order``-th derivative of the ramp, clamped outside [0, 1]."""
    t = np.asarray(t, dtype=float)
    poly = SMOOTHSTEP.deriv(order) if order else SMOOTHSTEP
    out = poly(np.clip(t, 0.0, 1.0))
    if order == 0:
        out = np.where(t >= 1.0, 1.0, np.where(t <= 0.0, 0.0, out))
    else:
        out = np.where((t <= 0.0) | (t >= 1.0), 0.0, out)
    return out
