from .atomic import write_bytes_atomic, write_text_atomic
from .numeric import all_finite, sigmoid
from .resilience import CircuitBreaker, CircuitBreakerOpen, retry_call

__all__ = [
    "CircuitBreaker",
    "CircuitBreakerOpen",
    "all_finite",
    "retry_call",
    "sigmoid",
    "write_bytes_atomic",
    "write_text_atomic",
]
