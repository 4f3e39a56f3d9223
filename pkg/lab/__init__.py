"""leaklab engine: generators, scoped pipelines, experiments and the manifest linter."""

__version__ = "0.1.0"
