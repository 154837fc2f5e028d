"""Thin wrappers around scipy.integrate.quad with the project tolerances.

Non-convergence is logged; it raises NumericError once the reported error
estimate is no longer small against the value.
"""

import logging

import numpy as np
from django.conf import settings
from scipy import integrate

from causalqft.exceptions import NumericError

logger = logging.getLogger(__name__)

# accepted error estimate, relative to max(1, |value|), when quad reports trouble
FALLBACK_TOLERANCE = 1e-7


class QuadratureError(NumericError):
    pass


def quad(function, a, b, epsabs=None, epsrel=None, limit=None, **kwargs):
    epsabs = settings.QUAD_EPSABS if epsabs is None else epsabs
    epsrel = settings.QUAD_EPSREL if epsrel is None else epsrel
    limit = settings.QUAD_LIMIT if limit is None else limit
    try:
        result = integrate.quad(
            function,
            a,
            b,
            epsabs=epsabs,
            epsrel=epsrel,
            limit=limit,
            full_output=1,
            **kwargs
        )
    except (ValueError, ZeroDivisionError, OverflowError) as e:
        raise QuadratureError("integrand failed on [%r, %r]: %s" % (a, b, e))
    value, error = result[0], result[1]
    if not np.isfinite(value):
        raise QuadratureError("non-finite integral on [%r, %r]" % (a, b))
    if len(result) > 3:
        message = result[3]
        if error > FALLBACK_TOLERANCE * max(1.0, abs(value)):
            raise QuadratureError(
                "quadrature on [%r, %r] did not converge: %s (error %.2e)"
                % (a, b, message, error)
            )
        logger.warning(
            "quadrature on [%r, %r] reported: %s; accepted with error %.2e",
            a,
            b,
            message.splitlines()[0] if message else "",
            error,
        )
    return value


def quad_complex(function, a, b, **kwargs):
    real = quad(lambda x: complex(function(x)).real, a, b, **kwargs)
    imag = quad(lambda x: complex(function(x)).imag, a, b, **kwargs)
    return complex(real, imag)


def principal_value(function, a, b, pole, **kwargs):
    """PV integral of function(x) / (x - pole) over [a, b], pole inside."""
    return quad(function, a, b, weight="cauchy", wvar=pole, **kwargs)
