"""Exception types raised by the domain modules.

Every error carries the name of the module that raised it so the CLI can
report ``{"error": ..., "module": ...}`` without string parsing.
"""


class DomainError(ValueError):
    module = "dirac3t"

    def __init__(self, message, *, detail=None):
        super().__init__(message)
        self.detail = detail

    def to_dict(self):
        out = {"error": str(self), "module": self.module}
        if self.detail is not None:
            out["detail"] = self.detail
        return out


class GeometryError(DomainError):
    module = "torus_geometry"


class SpectrumError(DomainError):
    module = "spectrum_engine"


class FlowError(DomainError):
    module = "flow_index"


class SectionError(DomainError):
    module = "spectral_sections"


class OracleError(DomainError):
    module = "lattice_oracle"
