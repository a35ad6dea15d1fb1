from importlib.metadata import version as _v, PackageNotFoundError as _PackageNotFoundError

__version__: str

try:
    __version__ = _v("brakkelab")
except _PackageNotFoundError:
    __version__ = "0.0.0-dev"
