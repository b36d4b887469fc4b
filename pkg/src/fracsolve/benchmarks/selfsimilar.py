"""Zero-toughness hydraulic-fracture similarity solutions.

Reference profiles for a fluid-driven fracture propagating in the
viscosity-dominated regime at constant injection rate:

* plane-strain (KGD) geometry, after Adachi & Detournay (2002),
* penny-shaped geometry, after Savitski & Detournay (2002).

The dimensionless opening/net-pressure profiles were computed once by
``tools/derive_selfsimilar_profiles.py`` (a Picard fixed-point solver for
the coupled elasticity/lubrication similarity equations) and are frozen
here as Chebyshev coefficient tables on the domain [0, 1].  The opening
carries an explicit tip factor (1 - s**2)**(2/3) and the net pressure an
inverse tip factor (1 - s**2)**(-1/3); the penny-shaped pressure has an
additional log-singular term at the inlet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev

KGD_GAMMA = 0.61540599626334513
KGD_TIP_BETA = 2.7429488143892291
KGD_INLET_OMEGA = 1.8294248089173004
KGD_OMEGA_CHEB = (
    1.7770278298582465,
    -0.053753036915319671,
    0.0037822430698552355,
    0.0041836686045225212,
    -2.4937205642731527e-05,
    0.00088724178801341763,
    0.0002457742648359786,
    0.00034649162287533235,
    0.00020596751540312544,
    0.00021567712722365457,
    0.00016824679900279759,
    0.00016619391424195067,
    0.00014497929621558333,
    0.00014158724261503243,
    0.00013015393594597671,
    0.00012706252283018599,
    0.00012001199599210235,
    0.00011741684968013346,
    0.00011260374594825903,
    0.00011044398079337638,
    0.00010689247694309395,
    0.00010507741906559577,
    0.00010229512506541459,
    0.00010074779256525543,
    9.8466306572786948e-05,
)
KGD_PRESSURE_CHEB = (
    0.30638968298237246,
    -0.3098369061682224,
    -0.10102492885700533,
    -0.046683003261365943,
    -0.028400939457747819,
    -0.019464699353026596,
    -0.014289827226952587,
    -0.011038674545546839,
    -0.0088246349026897177,
    -0.0072540526471334341,
    -0.0060852587385899744,
    -0.0051978070221964882,
    -0.004498006106631292,
    -0.0039435609277597766,
    -0.0034876767920388875,
    -0.0031162242717860658,
    -0.0028006403329319386,
    -0.0025386861733327623,
    -0.0023099508128532243,
    -0.0021178308611988677,
    -0.0019459542946628557,
    -0.0018006346465396536,
    -0.0016676652336107805,
    -0.0015549778639683432,
    -0.0014496018053638136,
)
PENNY_GAMMA = 0.69782529883596678
PENNY_TIP_BETA = 2.3953228534148021
PENNY_INLET_OMEGA = 1.7099786728244888
PENNY_PRESSURE_LOG_COEF = 0.093671595904882707
PENNY_OMEGA_CHEB = (
    1.5873700167671083,
    -0.10091384526913613,
    0.022242279073836795,
    0.0012775618224294986,
    0.0015610043686133097,
    0.00077835255420008855,
    0.00055216661263470424,
    0.0003198602667209377,
    0.00031866063443522453,
    0.00015907020250212234,
    0.00022079256676707547,
    8.7081588135695461e-05,
    0.00016903575368660859,
    4.814341826462302e-05,
    0.00013740879858847947,
    2.4892276494100861e-05,
    0.00011657245056486602,
    1.0491493910695119e-05,
    0.00010175265377467993,
    8.9860977002869836e-07,
    8.9899141984762422e-05,
    -6.1770091570356529e-06,
    7.9559148005623872e-05,
    -1.1588257945323033e-05,
    7.0359505275764393e-05,
)
PENNY_PRESSURE_CHEB = (
    0.40134164790257709,
    -0.30449350384712609,
    -0.12518454722137978,
    -0.053670577348492121,
    -0.032991124907772236,
    -0.022377870993385673,
    -0.016469403692107778,
    -0.01266156538841734,
    -0.010159083717183387,
    -0.0083079722824504695,
    -0.0070091840819689324,
    -0.0059471903826951583,
    -0.0051875422210344952,
    -0.0045091025685058007,
    -0.0040293140830375941,
    -0.0035614171594472947,
    -0.0032422648235271071,
    -0.002900355122909854,
    -0.0026803871444909025,
    -0.0024189249622031169,
    -0.0022636860126924807,
    -0.0020562794574204273,
    -0.0019451466221634692,
    -0.001775591558520801,
    -0.0016955559885994868,
)

_KGD_W = Chebyshev(KGD_OMEGA_CHEB, domain=[0.0, 1.0])
_KGD_P = Chebyshev(KGD_PRESSURE_CHEB, domain=[0.0, 1.0])
_PENNY_W = Chebyshev(PENNY_OMEGA_CHEB, domain=[0.0, 1.0])
_PENNY_P = Chebyshev(PENNY_PRESSURE_CHEB, domain=[0.0, 1.0])


def plane_strain_modulus(E: float, nu: float) -> float:
    return E / (1.0 - nu * nu)


def lubrication_viscosity(viscosity: float) -> float:
    """Channel-flow viscosity prefactor 12*mu of the cubic law."""
    return 12.0 * viscosity


def kgd_profiles(xi):
    """Dimensionless opening and net pressure of the plane-strain solution.

    ``xi`` is distance from the inlet over current half-length, in [0, 1).
    The pressure diverges like (1 - xi)**(-1/3) at the tip.
    """
    xi = np.asarray(xi, dtype=float)
    tip = 1.0 - xi * xi
    w = _KGD_W(xi) * np.maximum(tip, 0.0) ** (2.0 / 3.0)
    with np.errstate(divide="ignore"):
        p = _KGD_P(xi) * np.where(tip > 0.0, tip, np.nan) ** (-1.0 / 3.0)
    return w, p


def penny_profiles(rho):
    """Dimensionless opening and net pressure of the penny-shaped solution.

    ``rho`` is radius over current fracture radius, in (0, 1).  The
    pressure has a log singularity at the injection point and a
    (1 - rho)**(-1/3) singularity at the tip.
    """
    rho = np.asarray(rho, dtype=float)
    tip = 1.0 - rho * rho
    w = _PENNY_W(rho) * np.maximum(tip, 0.0) ** (2.0 / 3.0)
    with np.errstate(divide="ignore"):
        p = PENNY_PRESSURE_LOG_COEF * np.log(1.0 / rho)
        p = p + _PENNY_P(rho) * np.where(tip > 0.0, tip, np.nan) ** (-1.0 / 3.0)
    return w, p


@dataclass(frozen=True)
class SimilarityScales:
    """Dimensional scales of a self-similar fracture at one instant."""

    length: float  # current half-length (KGD) or radius (penny) [m]
    opening: float  # opening scale: profile W is opening / this [m]
    pressure: float  # net-pressure scale [Pa]


def kgd_scales(t: float, E: float, nu: float, viscosity: float, q0: float) -> SimilarityScales:
    """Scales of the plane-strain fracture at time ``t``.

    ``q0`` is the injection rate per unit out-of-plane thickness (m^2/s)
    feeding both wings; each wing receives q0/2.
    """
    ep = plane_strain_modulus(E, nu)
    mp = lubrication_viscosity(viscosity)
    eps = (mp / (ep * t)) ** (1.0 / 3.0)
    lstar = np.sqrt(q0) * (ep / mp) ** (1.0 / 6.0) * t ** (2.0 / 3.0)
    half_length = KGD_GAMMA * lstar
    return SimilarityScales(length=half_length, opening=eps * half_length, pressure=eps * ep)


def penny_scales(t: float, E: float, nu: float, viscosity: float, q0: float) -> SimilarityScales:
    """Scales of the penny-shaped fracture at time ``t`` (``q0`` in m^3/s)."""
    ep = plane_strain_modulus(E, nu)
    mp = lubrication_viscosity(viscosity)
    eps = (mp / (ep * t)) ** (1.0 / 3.0)
    lstar = q0 ** (1.0 / 3.0) * (ep / mp) ** (1.0 / 9.0) * t ** (4.0 / 9.0)
    radius = PENNY_GAMMA * lstar
    return SimilarityScales(length=radius, opening=eps * radius, pressure=eps * ep)


def kgd_half_length(t, E: float, nu: float, viscosity: float, q0: float):
    t = np.asarray(t, dtype=float)
    ep = plane_strain_modulus(E, nu)
    mp = lubrication_viscosity(viscosity)
    return KGD_GAMMA * np.sqrt(q0) * (ep / mp) ** (1.0 / 6.0) * t ** (2.0 / 3.0)


def penny_radius(t, E: float, nu: float, viscosity: float, q0: float):
    t = np.asarray(t, dtype=float)
    ep = plane_strain_modulus(E, nu)
    mp = lubrication_viscosity(viscosity)
    return PENNY_GAMMA * q0 ** (1.0 / 3.0) * (ep / mp) ** (1.0 / 9.0) * t ** (4.0 / 9.0)


def kgd_reference(x, t: float, E: float, nu: float, viscosity: float, q0: float):
    """Opening and net pressure at distances ``x`` from the inlet at time ``t``.

    Opening is zero beyond the tip; net pressure is NaN there (the
    solution only defines it inside the fracture).
    """
    s = kgd_scales(t, E, nu, viscosity, q0)
    xi = np.asarray(x, dtype=float) / s.length
    w, p = kgd_profiles(np.minimum(xi, 1.0))
    w = np.where(xi < 1.0, s.opening * w, 0.0)
    p = np.where(xi < 1.0, s.pressure * p, np.nan)
    return w, p


def penny_reference(r, t: float, E: float, nu: float, viscosity: float, q0: float):
    """Opening and net pressure at radii ``r`` at time ``t`` (penny fracture)."""
    s = penny_scales(t, E, nu, viscosity, q0)
    rho = np.asarray(r, dtype=float) / s.length
    w, p = penny_profiles(np.minimum(rho, 1.0))
    w = np.where(rho < 1.0, s.opening * w, 0.0)
    p = np.where(rho < 1.0, s.pressure * p, np.nan)
    return w, p
