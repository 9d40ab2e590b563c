import copy
import json
import re
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from pathlib import Path

from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from .cases import BUILTIN_CASES, LAYOUTS, validate_geometry
from .exceptions import ConfigurationError

PROBE_KINDS = ('displacement', 'trajectory', 'pressure', 'energy')


class CaseConfigForm(forms.Form):
    """基準案例設定表單"""

    name = forms.CharField(max_length=100, label='案例名稱')
    layout = forms.ChoiceField(choices=[(key, key) for key in LAYOUTS], label='幾何配置')
    description = forms.CharField(required=False, label='說明')
    geometry = forms.JSONField(required=False, label='幾何參數', help_text='依幾何配置而定，未給定者使用內建值')
    structure_thickness = forms.FloatField(min_value=0.0, label='結構厚度 (m)')
    resolution = forms.IntegerField(min_value=1, label='解析度', help_text='結構厚度 / dp^S')
    resolution_ratio = forms.FloatField(min_value=1.0, label='dp^F / dp^S')
    dp_solid = forms.FloatField(required=False, label='固體粒子間距 (m)')
    dp_fluid = forms.FloatField(required=False, label='流體粒子間距 (m)')
    fluid_density = forms.FloatField(label='流體參考密度 (kg/m³)')
    sound_speed = forms.FloatField(label='人工聲速 (m/s)')
    viscosity = forms.FloatField(min_value=0.0, label='運動黏滯係數 (m²/s)')
    solid_density = forms.FloatField(label='固體密度 (kg/m³)')
    youngs_modulus = forms.FloatField(label='楊氏模數 (Pa)')
    poisson_ratio = forms.FloatField(label='蒲松比')
    gravity = forms.JSONField(label='重力加速度 (m/s²)')
    structure_gravity = forms.BooleanField(required=False, label='結構受重力')
    correction = forms.ChoiceField(choices=[('rkgc', 'RKGC'), ('none', '不修正')], label='核梯度修正')
    wkgc_alpha = forms.FloatField(min_value=0.0, label='WKGC 門檻 α')
    smoothness_indicator = forms.ChoiceField(
        choices=[('determinant', '行列式'), ('norm', '範數')], label='平滑度指標',
    )
    transport_velocity = forms.ChoiceField(
        choices=[('auto', '依案例'), ('on', '開啟'), ('off', '關閉')], label='傳輸速度位置修正',
    )
    transport_eta = forms.FloatField(min_value=0.0, max_value=0.5, label='位置修正係數 η')
    damping = forms.FloatField(min_value=0.0, label='固體阻尼 ζ (1/s)')
    end_time = forms.FloatField(label='結束時間 (s)')
    fixed_dt = forms.FloatField(required=False, label='固定流體步長 (s)')
    cfl_advection = forms.FloatField(label='advection CFL')
    cfl_acoustic = forms.FloatField(label='acoustic CFL')
    probe_interval = forms.FloatField(label='探針取樣間隔 (s)')
    snapshot_interval = forms.FloatField(required=False, label='快照間隔 (s)')
    probes = forms.JSONField(required=False, label='探針')
    fluid_h_factor = forms.FloatField(label='h^F / dp^F')
    solid_h_factor = forms.FloatField(label='h^S / dp^S')
    wall_layers = forms.IntegerField(min_value=1, label='牆粒子層數')

    def clean_geometry(self):
        """幾何參數與內建值合併，並拒絕該配置不認得的鍵"""
        geometry = self.cleaned_data.get('geometry') or {}
        if not isinstance(geometry, dict):
            raise ValidationError('幾何參數必須是物件')
        layout = self.cleaned_data.get('layout')
        if layout is None:
            return geometry
        unknown = validate_geometry(layout, geometry)
        if unknown:
            raise ValidationError(f'{layout} 不認得的幾何參數：{", ".join(unknown)}')
        merged = copy.deepcopy(BUILTIN_CASES[layout]['geometry'])
        merged.update(geometry)
        return merged

    def clean_structure_thickness(self):
        value = self.cleaned_data['structure_thickness']
        if value <= 0.0:
            raise ValidationError('結構厚度必須為正值')
        return value

    def _positive(self, name, message):
        value = self.cleaned_data[name]
        if value is not None and value <= 0.0:
            raise ValidationError(message)
        return value

    def clean_dp_solid(self):
        return self._positive('dp_solid', '固體粒子間距必須為正值')

    def clean_dp_fluid(self):
        return self._positive('dp_fluid', '流體粒子間距必須為正值')

    def clean_fluid_density(self):
        return self._positive('fluid_density', '流體密度必須為正值')

    def clean_sound_speed(self):
        return self._positive('sound_speed', '人工聲速必須為正值')

    def clean_solid_density(self):
        return self._positive('solid_density', '固體密度必須為正值')

    def clean_youngs_modulus(self):
        return self._positive('youngs_modulus', '楊氏模數必須為正值')

    def clean_poisson_ratio(self):
        """不支援 ν >= 0.5 的不可壓縮極限"""
        value = self.cleaned_data['poisson_ratio']
        if not 0.0 < value < 0.5:
            raise ValidationError('蒲松比必須介於 0 與 0.5 之間')
        return value

    def clean_gravity(self):
        value = self.cleaned_data['gravity']
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ValidationError('重力加速度必須是兩個數值')
        try:
            return tuple(float(component) for component in value)
        except (TypeError, ValueError):
            raise ValidationError('重力加速度必須是兩個數值')

    def clean_end_time(self):
        return self._positive('end_time', '結束時間必須為正值')

    def clean_fixed_dt(self):
        return self._positive('fixed_dt', '固定步長必須為正值')

    def clean_cfl_advection(self):
        return self._positive('cfl_advection', 'CFL 係數必須為正值')

    def clean_cfl_acoustic(self):
        return self._positive('cfl_acoustic', 'CFL 係數必須為正值')

    def clean_probe_interval(self):
        return self._positive('probe_interval', '取樣間隔必須為正值')

    def clean_snapshot_interval(self):
        return self._positive('snapshot_interval', '快照間隔必須為正值')

    def clean_fluid_h_factor(self):
        return self._positive('fluid_h_factor', '平滑長度係數必須為正值')

    def clean_solid_h_factor(self):
        return self._positive('solid_h_factor', '平滑長度係數必須為正值')

    def clean_probes(self):
        """每個探針需有唯一 id 與合法種類；位移與軌跡探針需指定物體與位置"""
        probes = self.cleaned_data.get('probes') or []
        if not isinstance(probes, list):
            raise ValidationError('探針必須是清單')
        seen = set()
        cleaned = []
        for probe in probes:
            if not isinstance(probe, dict):
                raise ValidationError('每個探針必須是物件')
            probe_id = str(probe.get('id', ''))
            if not re.match(r'^[A-Za-z0-9_-]+$', probe_id):
                raise ValidationError(f'探針 id 只能包含英文字母、數字、底線、短橫線：{probe_id!r}')
            if probe_id in seen:
                raise ValidationError(f'探針 id 重複：{probe_id}')
            seen.add(probe_id)
            kind = probe.get('kind')
            if kind not in PROBE_KINDS:
                raise ValidationError(f'探針 {probe_id} 的種類不合法：{kind}')
            if kind in ('displacement', 'trajectory') and not probe.get('body'):
                raise ValidationError(f'探針 {probe_id} 需要指定物體')
            if kind != 'energy':
                point = probe.get('point')
                if not isinstance(point, (list, tuple)) or len(point) != 2:
                    raise ValidationError(f'探針 {probe_id} 需要二維位置')
            cleaned.append(dict(probe))
        return cleaned

    def clean(self):
        """解析粒子間距，並檢查多解析度條件 dp^F >= dp^S"""
        cleaned_data = super().clean()
        thickness = cleaned_data.get('structure_thickness')
        resolution = cleaned_data.get('resolution')
        ratio = cleaned_data.get('resolution_ratio')
        if thickness is None or resolution is None or ratio is None:
            return cleaned_data

        dp_solid = cleaned_data.get('dp_solid')
        if dp_solid is None and 'dp_solid' not in self.errors:
            dp_solid = thickness / resolution
            cleaned_data['dp_solid'] = dp_solid
        dp_fluid = cleaned_data.get('dp_fluid')
        if dp_fluid is None and 'dp_fluid' not in self.errors and dp_solid is not None:
            dp_fluid = ratio * dp_solid
            cleaned_data['dp_fluid'] = dp_fluid

        if dp_solid is not None and dp_fluid is not None and dp_fluid < dp_solid:
            self.add_error('dp_fluid', f'流體粒子間距 {dp_fluid} 不可小於固體粒子間距 {dp_solid}')
        return cleaned_data


@dataclass(frozen=True)
class CaseConfig:
    """解析完成的案例設定"""

    name: str
    layout: str
    structure_thickness: float
    resolution: int
    dp_solid: float
    dp_fluid: float
    fluid_density: float
    sound_speed: float
    solid_density: float
    youngs_modulus: float
    poisson_ratio: float
    end_time: float
    resolution_ratio: float = 2.0
    description: str = ''
    geometry: dict = field(default_factory=dict)
    viscosity: float = 0.0
    gravity: tuple = (0.0, -9.81)
    structure_gravity: bool = True
    correction: str = 'rkgc'
    wkgc_alpha: float = 0.5
    smoothness_indicator: str = 'determinant'
    transport_velocity: str = 'auto'
    transport_eta: float = 0.2
    damping: float = 0.0
    fixed_dt: float = None
    cfl_advection: float = 0.25
    cfl_acoustic: float = 0.6
    probe_interval: float = 1e-3
    snapshot_interval: float = None
    probes: tuple = ()
    fluid_h_factor: float = 1.3
    solid_h_factor: float = 1.15
    wall_layers: int = 3

    @property
    def fluid_h(self):
        return self.fluid_h_factor * self.dp_fluid

    @property
    def solid_h(self):
        return self.solid_h_factor * self.dp_solid

    @property
    def correction_enabled(self):
        return self.correction == 'rkgc'

    @property
    def regularization_enabled(self):
        """auto 時僅內流案例開啟"""
        if self.transport_velocity == 'auto':
            return LAYOUTS[self.layout].internal_flow
        return self.transport_velocity == 'on'

    def as_dict(self):
        data = asdict(self)
        data['gravity'] = list(self.gravity)
        data['probes'] = [dict(probe) for probe in self.probes]
        return data


def field_defaults():
    defaults = getattr(settings, 'SPH_FSI_DEFAULTS', {})
    return {
        'description': '',
        'geometry': {},
        'resolution_ratio': defaults.get('resolution_ratio', 2.0),
        'viscosity': 0.0,
        'gravity': [0.0, -9.81],
        'structure_gravity': True,
        'correction': 'rkgc',
        'wkgc_alpha': defaults.get('wkgc_alpha', 0.5),
        'smoothness_indicator': defaults.get('smoothness_indicator', 'determinant'),
        'transport_velocity': 'auto',
        'transport_eta': defaults.get('transport_eta', 0.2),
        'damping': 0.0,
        'cfl_advection': defaults.get('cfl_advection', 0.25),
        'cfl_acoustic': defaults.get('cfl_acoustic', 0.6),
        'probe_interval': 1e-3,
        'probes': [],
        'fluid_h_factor': defaults.get('fluid_h_factor', 1.3),
        'solid_h_factor': defaults.get('solid_h_factor', 1.15),
        'wall_layers': defaults.get('wall_layers', 3),
    }


def _read_source(source):
    if isinstance(source, Mapping):
        return copy.deepcopy(dict(source))
    name = str(source)
    if name in BUILTIN_CASES:
        return {'name': name, **copy.deepcopy(BUILTIN_CASES[name])}
    path = Path(name)
    if path.is_file():
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except (OSError, ValueError) as error:
            raise ConfigurationError(f'無法讀取案例設定 {path}：{error}', errors={'case': [str(error)]})
        if not isinstance(data, dict):
            raise ConfigurationError(f'案例設定必須是 JSON 物件：{path}', errors={'case': ['not an object']})
        data.setdefault('name', path.stem)
        return data
    raise ConfigurationError(f'找不到案例：{name}', errors={'case': [name]})


def load_case_config(source, overrides=None):
    """讀取內建案例名稱、JSON 檔路徑或 mapping，套用預設值並驗證

    overrides 中值為 None 的鍵會被忽略；覆寫 resolution 時重新解析粒子間距。
    """
    data = _read_source(source)
    overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
    if 'resolution' in overrides:
        for key in ('dp_solid', 'dp_fluid'):
            if key not in overrides:
                data.pop(key, None)
    data.update(overrides)

    known = set(CaseConfigForm.base_fields)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(
            f'未知的設定鍵：{", ".join(unknown)}', errors={key: ['未知的設定鍵'] for key in unknown},
        )

    merged = field_defaults()
    merged.update(data)
    form = CaseConfigForm(data=merged)
    if not form.is_valid():
        errors = {key: [str(message) for message in messages] for key, messages in form.errors.items()}
        summary = '; '.join(f'{key}: {" ".join(messages)}' for key, messages in errors.items())
        raise ConfigurationError(f'案例設定不合法：{summary}', errors=errors)

    cleaned = dict(form.cleaned_data)
    cleaned['probes'] = tuple(cleaned.get('probes') or ())
    if cleaned.get('description') is None:
        cleaned['description'] = ''
    return CaseConfig(**cleaned)
