"""Exception hierarchy.

Every error carries a ``code`` (the class name by default) that is used as the
``{"error": "<code>"}`` body of HTTP 4xx/5xx responses.
"""


class FogSwitchError(Exception):
    @property
    def code(self) -> str:
        return type(self).__name__


# request / dataset validation
class RequestError(FogSwitchError, ValueError):
    pass


class EmptyDataset(RequestError):
    pass


class RaggedDataset(RequestError):
    pass


class NonPositiveParam(RequestError):
    pass


class DimensionOutOfRange(RequestError):
    pass


class MalformedRow(RequestError):
    pass


class KTooLarge(RequestError):
    pass


class NonFinitePoint(RequestError):
    pass


class BadRequest(RequestError):
    pass


# simulator
class UnknownInstance(FogSwitchError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InstanceUnreachable(FogSwitchError):
    def __init__(self, instance_id, reason=""):
        super().__init__(f"instance {instance_id!r} unreachable: {reason}")
        self.instance_id = instance_id


# predictors
class EmptyTrainingSet(FogSwitchError, ValueError):
    pass


class NonFiniteLoss(FogSwitchError, ArithmeticError):
    pass


class MalformedModel(FogSwitchError, ValueError):
    pass


class SchemaMismatch(MalformedModel):
    pass


class ModelIOError(FogSwitchError, OSError):
    pass


class NoConvergenceWarning(UserWarning):
    """SMO stopped on its pass budget before reaching the KKT tolerance."""


# planner
class MissingInstanceData(FogSwitchError, ValueError):
    def __init__(self, instance_id):
        super().__init__(f"no monitoring records for instance {instance_id!r}")
        self.instance_id = instance_id


# execution / proxy
class ForwardError(FogSwitchError):
    def __init__(self, instance_id, message):
        super().__init__(f"[{instance_id}] {message}")
        self.instance_id = instance_id


class Timeout(ForwardError):
    pass


class ConnectionRefused(ForwardError):
    pass


class UpstreamError(ForwardError):
    def __init__(self, instance_id, status, body: bytes):
        super().__init__(instance_id, f"upstream returned HTTP {status}")
        self.status = status
        self.body = body


class BindFailure(FogSwitchError, OSError):
    pass


class ModelLoadFailure(FogSwitchError):
    pass


# evaluation
class EmptyMatrix(FogSwitchError, ValueError):
    pass


class MissingTier(FogSwitchError, ValueError):
    pass


class ConfigError(FogSwitchError, ValueError):
    pass
