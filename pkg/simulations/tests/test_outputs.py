import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from simulations.exceptions import OutputError
from simulations.forms import load_case_config
from simulations.outputs import SNAPSHOT_HEADER, ensure_directory, format_value, snapshot_filename, write_probe_csv
from simulations.probes import ProbeSeries
from simulations.runner import Schedule, run_case

SHORT_RUN = {'resolution': 2, 'end_time': 2e-4, 'probe_interval': 1e-4, 'snapshot_interval': 1e-4}


class FormatTest(SimpleTestCase):
    """輸出格式測試"""

    def test_format_value(self):
        """測試 9 位有效數字"""
        self.assertEqual(format_value(1.0 / 3.0), '0.333333333')
        self.assertEqual(format_value(2), '2')
        self.assertEqual(format_value(-1.5e-20), '-1.5e-20')

    def test_snapshot_filename(self):
        """測試快照檔名補零到 8 位"""
        self.assertEqual(snapshot_filename(12), 'snap_00000012.csv')

    def test_probe_csv_layout(self):
        """測試探針 CSV 的標頭與換行"""
        series = ProbeSeries(probe_id='energy', kind='energy')
        series.append(0.0, (1.0, 2.0, 3.0, 6.0, 0.0))
        with tempfile.TemporaryDirectory() as directory:
            path = write_probe_csv(series, directory)
            content = Path(path).read_bytes()
        self.assertEqual(Path(path).name, 'probe_energy.csv')
        self.assertEqual(content, b'time,kinetic,potential,strain,total,normalized\n0,1,2,3,6,0\n')

    def test_directory_under_file(self):
        """測試無法建立輸出目錄"""
        with tempfile.TemporaryDirectory() as directory:
            blocker = Path(directory) / 'blocker'
            blocker.write_text('x', encoding='utf-8')
            with self.assertRaises(OutputError):
                ensure_directory(blocker / 'out')


class ScheduleTest(SimpleTestCase):
    """輸出排程測試"""

    def test_schedule(self):
        """測試 t_k = k·interval 且一次跳過已過的時間點"""
        schedule = Schedule(0.1)
        self.assertAlmostEqual(schedule.next_time, 0.1)
        self.assertFalse(schedule.due(0.05))
        self.assertTrue(schedule.due(0.1))
        schedule.advance(0.35)
        self.assertAlmostEqual(schedule.next_time, 0.4)

    def test_disabled_schedule(self):
        """測試沒有間隔時不會觸發"""
        schedule = Schedule(None)
        self.assertFalse(schedule.due(1e9))


class RunCaseTest(SimpleTestCase):
    """短時間執行案例的輸出測試"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = load_case_config('hydrostatic-plate', SHORT_RUN)
        cls.directory = tempfile.TemporaryDirectory()
        cls.output = Path(cls.directory.name) / 'first'
        cls.result = run_case(cls.config, cls.output)

    @classmethod
    def tearDownClass(cls):
        cls.directory.cleanup()
        super().tearDownClass()

    def test_reaches_end_time(self):
        """測試執行到結束時間"""
        self.assertEqual(self.result.status, 'completed')
        self.assertAlmostEqual(self.result.state.clock.t, 2e-4, places=12)
        self.assertEqual(self.result.state.clock.advection_index, 2)

    def test_probe_rows(self):
        """測試探針在 t = 0、1e-4、2e-4 取樣"""
        rows = (self.output / 'probe_midspan.csv').read_text(encoding='utf-8').splitlines()
        self.assertEqual(rows[0], 'time,ux,uy')
        self.assertEqual([row.split(',')[0] for row in rows[1:]], ['0', '0.0001', '0.0002'])
        self.assertTrue((self.output / 'probe_energy.csv').exists())

    def test_snapshots(self):
        """測試快照檔名與內容"""
        names = sorted(path.name for path in self.output.glob('snap_*.csv'))
        self.assertEqual(names, ['snap_00000001.csv', 'snap_00000002.csv'])
        rows = (self.output / names[-1]).read_text(encoding='utf-8').splitlines()
        self.assertEqual(rows[0], ','.join(SNAPSHOT_HEADER))
        self.assertEqual(len(rows) - 1, self.result.state.particle_count)

    def test_manifest(self):
        """測試 manifest 的狀態與計數器"""
        lines = (self.output / 'manifest.txt').read_text(encoding='utf-8').splitlines()
        entries = dict(line.split('=', 1) for line in lines)
        self.assertEqual(entries['status'], 'completed')
        self.assertEqual(entries['case'], 'hydrostatic-plate')
        self.assertEqual(entries['dt_policy'], 'fixed')
        self.assertEqual(entries['snapshots'], '2')
        self.assertEqual(entries['partial_files'], '')
        self.assertEqual(int(entries['particles']), self.result.state.particle_count)
        self.assertIn('counter.correction_singular', entries)
        self.assertIn('counter.empty_history', entries)

    def test_rerun_is_deterministic(self):
        """測試相同設定重跑得到相同位元組的輸出"""
        second = Path(self.directory.name) / 'second'
        run_case(self.config, second)
        for name in ('probe_midspan.csv', 'probe_energy.csv', 'snap_00000002.csv'):
            self.assertEqual((self.output / name).read_bytes(), (second / name).read_bytes(), name)

    def test_worker_count_is_deterministic(self):
        """測試單執行緒與三執行緒執行得到相同位元組的輸出"""
        single = Path(self.directory.name) / 'single'
        threaded = Path(self.directory.name) / 'threaded'
        run_case(self.config, single, workers=1)
        run_case(self.config, threaded, workers=3)
        for name in ('probe_midspan.csv', 'probe_energy.csv', 'snap_00000001.csv', 'snap_00000002.csv'):
            self.assertEqual((single / name).read_bytes(), (threaded / name).read_bytes(), name)
