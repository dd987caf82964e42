"""Independent high-precision references used by the tests."""
import mpmath as mp


def chi_square_sf_quad(x, df, dps=40):
    """Upper chi-square tail by adaptive quadrature of the density at ``dps`` digits."""
    with mp.workdps(dps):
        k = mp.mpf(df)
        x = mp.mpf(x)
        norm = 1 / (2 ** (k / 2) * mp.gamma(k / 2))

        def density(t):
            return norm * t ** (k / 2 - 1) * mp.exp(-t / 2)

        # split points keep the integrator on the bulk of the mass
        return float(mp.quad(density, [x, x + 10, x + 50, x + 200, mp.inf]))
