"""Exception hierarchy shared across the package."""


class EchoSliceError(Exception):
    """Base class for all errors raised by echoslice."""


class CodecError(EchoSliceError):
    """Malformed container, DICOM element, or frame payload."""


class GeometryError(EchoSliceError):
    """Invalid plane or coordinate arguments."""


class PlaneOutsideVolumeError(EchoSliceError):
    """The requested cutting plane does not intersect the volume."""

    def __init__(self, message="plane outside volume"):
        super().__init__(message)


class LandmarkError(EchoSliceError):
    """Landmark localization failed or produced implausible anatomy."""


class SearchError(EchoSliceError):
    """View search could not be completed."""


class AdapterError(EchoSliceError):
    """An external landmark or scorer adapter failed."""
