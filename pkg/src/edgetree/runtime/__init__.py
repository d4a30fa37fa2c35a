from .channel import ReliableChannel
from .core import (
    TIMEOUT,
    AlreadyBound,
    App,
    DeploymentError,
    Flow,
    Invocation,
    KindMismatch,
    LevelViolation,
    LogRecord,
    NONE_ELIGIBLE,
    NotSynchronous,
    Placement,
    ProgramInvalid,
    Runtime,
    RuntimeErrorBase,
    SameAppViolation,
    SubtreeViolation,
    SyncCall,
    UnboundHandler,
    UnknownFunction,
    UnknownVariable,
    deploy_app,
    select_execution_level,
)

__all__ = [
    "TIMEOUT", "AlreadyBound", "App", "DeploymentError", "Flow", "Invocation", "KindMismatch",
    "LevelViolation", "LogRecord", "NONE_ELIGIBLE", "NotSynchronous", "Placement", "ProgramInvalid",
    "ReliableChannel", "Runtime", "RuntimeErrorBase", "SameAppViolation", "SubtreeViolation",
    "SyncCall", "UnboundHandler", "UnknownFunction", "UnknownVariable", "deploy_app",
    "select_execution_level",
]
