class InstanceError(ValueError):
    """Documento de instância malformado ou instância inválida para o comando."""


class SizingError(ValueError):
    """Subconjunto grande demais para o roteamento exato."""


class InfeasibleError(ValueError):
    """Algum cliente não é coberto por nenhum cluster do conjunto."""


class InadmissibleActionError(ValueError):
    """Ação de compra/venda fora de A(t, ω2)."""


class ConvergenceError(RuntimeError):
    """A iteração de valor relativa atingiu o limite de iterações."""


class ConfigError(ValueError):
    """Opção de linha de comando ou de arquivo de configuração inválida."""
