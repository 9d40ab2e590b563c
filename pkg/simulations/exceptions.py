"""模擬器的例外階層"""


class SimulationError(Exception):
    """所有模擬錯誤的基底類別"""


class ConfigurationError(SimulationError, ValueError):
    """案例、核函數或材料參數不合法"""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = dict(errors or {})


class GeometryError(ConfigurationError):
    """區域退化或物體彼此重疊"""


class NeighborBuildError(SimulationError):
    """粒子落在非週期格網之外"""


class ReferenceBuildError(SimulationError):
    """固體參考構形的修正矩陣不可逆"""


class SimulationAbort(SimulationError):
    """執行期間中止，附帶步數與時間"""

    def __init__(self, message, step=None, time=None):
        context = []
        if step is not None:
            context.append(f'step={step}')
        if time is not None:
            context.append(f't={time:.6g}')
        if context:
            message = f'{message} ({", ".join(context)})'
        super().__init__(message)
        self.step = step
        self.time = time


class ElementInversionError(SimulationAbort):
    """det(F) <= 0"""


class TimeStepError(SimulationAbort):
    """時間步長計算結果非正值"""


class InsufficientPeriodicityError(SimulationError):
    """分析視窗中的峰值不足"""


class OutputError(SimulationError):
    """輸出檔寫入失敗"""
