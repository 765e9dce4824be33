"""Exception hierarchy.

Every error carries a dotted ``code`` (e.g. ``parse.syntax``) that the CLI
prints as the machine-readable error class.
"""


class GqlCostError(Exception):
    code = "error"
    exit_status = 1

    def __init__(self, message, code=None):
        super().__init__(message)
        if code is not None:
            self.code = code


class GraphQLSyntaxError(GqlCostError):
    code = "parse.syntax"

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class UnsupportedConstructError(GqlCostError):
    code = "parse.unsupported"


class SchemaError(GqlCostError):
    code = "schema.invalid"


class ValidationError(GqlCostError):
    code = "validate.invalid"


class ShapeMismatchError(GqlCostError):
    code = "cost.shape_mismatch"


class UnboundedListError(GqlCostError):
    code = "cost.unbounded_list"


class ConfigError(GqlCostError):
    code = "config.invalid"


class FeatureSpaceError(GqlCostError):
    code = "features.space_mismatch"


class ModelError(GqlCostError):
    code = "model.invalid"


class DatasetError(GqlCostError):
    code = "dataset.invalid"
