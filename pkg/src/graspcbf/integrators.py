"""Fixed-step explicit Runge-Kutta integration."""

# Bogacki-Shampine 3(2) tableau, used here as a plain fixed-step 3rd-order method
_BS3_C = (0.0, 0.5, 0.75)
_BS3_B = (2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0)


def rk3_step(f, t, y, dt, k1=None):
    """One Bogacki-Shampine step of ``y' = f(t, y)``; ``y`` is a flat array.

    ``k1`` may carry an already computed ``f(t, y)``.
    """
    if k1 is None:
        k1 = f(t, y)
    k2 = f(t + _BS3_C[1] * dt, y + 0.5 * dt * k1)
    k3 = f(t + _BS3_C[2] * dt, y + 0.75 * dt * k2)
    return y + dt * (_BS3_B[0] * k1 + _BS3_B[1] * k2 + _BS3_B[2] * k3)
