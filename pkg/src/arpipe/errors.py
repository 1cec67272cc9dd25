"""Exception hierarchy shared by every stage of the pipeline.

Each class carries a ``code`` equal to its name; the CLI prints it in
``error: <code>: <detail>`` lines.
"""


class PipelineError(Exception):
    """Base class for data errors raised by arpipe."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidParameter(PipelineError, ValueError):
    pass


# vtk / ply ingestion
class HeaderMalformed(PipelineError):
    pass


class UnsupportedDataset(PipelineError):
    pass


class UnsupportedEncoding(PipelineError):
    pass


class IndexOutOfRange(PipelineError):
    pass


class TruncatedPayload(PipelineError):
    pass


class UnsupportedCellType(PipelineError):
    pass


class EmptySeries(PipelineError):
    pass


class UnknownField(PipelineError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class BadComponent(PipelineError, ValueError):
    pass


# geometry
class DegenerateBounds(PipelineError):
    pass


class NoSurfaceCells(PipelineError):
    pass


class MissingNormals(PipelineError):
    pass


class NoLineCells(PipelineError):
    pass


class DegenerateSegment(PipelineError):
    pass


class BadRatio(InvalidParameter):
    pass


class ConnectivityMismatch(PipelineError):
    pass


# animation / export
class EmptyFrames(PipelineError):
    pass


class BadFps(InvalidParameter):
    pass


class TooManyVertices(PipelineError):
    pass


class EmptyGeometry(PipelineError):
    pass


# cli
class UnknownFormat(PipelineError):
    pass


class MissingModel(PipelineError):
    pass
