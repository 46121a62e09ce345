import os

from models.errors import ConfigError


def worker_count(requested: int | None = None) -> int:
    """Número de threads: valor pedido, senão SCIRP_THREADS, senão os núcleos disponíveis."""
    if requested:
        return max(1, int(requested))
    raw = os.environ.get('SCIRP_THREADS', '').strip()
    if raw:
        try:
            value = int(raw)
        except ValueError as e:
            raise ConfigError(f"SCIRP_THREADS inválido: '{raw}'") from e
        if value < 1:
            raise ConfigError(f"SCIRP_THREADS deve ser >= 1 (recebido {value})")
        return value
    return os.cpu_count() or 1
