from collections import Counter

# 可恢復的退化情況，計數後繼續執行
COUNTER_NAMES = (
    'correction_singular',
    'viscous_zero_distance',
    'normal_degenerate',
    'empty_history',
)


class DegeneracyCounters(Counter):
    """退化情況計數器，寫入 manifest 與執行紀錄"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        for name in COUNTER_NAMES:
            self.setdefault(name, 0)

    def as_dict(self):
        return {name: int(self[name]) for name in sorted(self)}
