"""Exception types shared across the package."""


class SpinlevError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SpinlevError):
    """Bad or unknown configuration input."""


class NonPositiveError(ConfigError):
    def __init__(self, field, value):
        self.field = field
        self.value = value
        super().__init__(f"{field} must be strictly positive, got {value!r}")


class UnderdampedViolation(ConfigError):
    def __init__(self, omega_phi, gamma):
        super().__init__(
            f"underdamped regime required: omega_phi={omega_phi:g} rad/s "
            f"must exceed gamma={gamma:g} rad/s"
        )


class StepTooLarge(ConfigError):
    def __init__(self, dt, bound, why):
        super().__init__(f"dt={dt:g} s exceeds stability bound {bound:g} s ({why})")
        self.dt = dt
        self.bound = bound


class NonFinite(SpinlevError):
    """A derivative or state became non-finite during integration."""


class InvariantViolated(SpinlevError):
    def __init__(self, step, which):
        self.step = step
        self.which = which
        super().__init__(f"invariant '{which}' violated at step {step}")


class TooShort(SpinlevError):
    """Time series too short for the requested estimator."""


class TooFewSamples(SpinlevError):
    """Not enough samples for a meaningful histogram."""


class NoPeak(SpinlevError):
    """Spectrum has no resolvable peak to fit."""


class NoConvergence(SpinlevError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"fit did not converge after {iterations} iterations "
                         f"(residual {residual:g})")


class DegenerateModes(SpinlevError):
    """Two-mode fit requested but the mode frequencies are unresolvable."""


class NonPositiveDamping(SpinlevError):
    """Effective damping is not positive; a temperature is undefined."""


class NonStationary(SpinlevError):
    """Variance drifts too much across the record for a temperature estimate."""


class NonLinearResponse(SpinlevError):
    """Probe amplitude too large: response is not in the linear regime."""


class NoSteadyState(SpinlevError):
    """Periodic steady state not reached within the allotted periods."""


class NoFixedPoint(SpinlevError):
    """Fixed-point refinement of the effective frequency failed to converge."""


class NoDoubleWell(SpinlevError):
    """Effective potential has a single minimum; no barrier to speak of."""


class NoSignChange(SpinlevError):
    """Bisection grid does not bracket a sign change."""
