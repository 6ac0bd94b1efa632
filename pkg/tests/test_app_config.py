#!/usr/bin/env python

import json
import os
import unittest

from decimal import Decimal
from fractions import Fraction

import numpy as np

import app_config
import render_utils

class AppConfigTestCase(unittest.TestCase):
    """
    Run profiles and environment overrides.
    """
    def tearDown(self):
        app_config.configure_targets(os.environ.get('BENCH_TARGET'))

    def test_full_profile(self):
        app_config.configure_targets('full')

        assert app_config.TPCH_SCALE == 50
        assert app_config.SSB_SCALE == 80
        assert app_config.OVERHEAD_SCALES == [1, 10, 50]
        assert app_config.BENCH_TARGET == 'full'

    def test_desk_is_the_default(self):
        app_config.configure_targets(None)

        assert app_config.BENCH_TARGET == 'desk'
        assert app_config.TPCH_SCALE == 0.01

    def test_overrides_are_cast(self):
        env = {
            'EXACT_SELECTIVITY_MIN_TABLE_SIZE': '500',
            'EXACT_SELECTIVITY_MAX_SELECTIVITY': '0.05',
            'EXACT_SELECTIVITY_ESC_ENABLED': 'off',
            'EXACT_SELECTIVITY_SELECTIVITY_FRACTIONS': '0.1,1',
            'EXACT_SELECTIVITY_get_overrides': 'ignored',
        }
        saved = dict(os.environ)
        os.environ.update(env)

        try:
            overrides = app_config.get_overrides()
        finally:
            os.environ.clear()
            os.environ.update(saved)

        assert overrides['MIN_TABLE_SIZE'] == 500
        assert overrides['MAX_SELECTIVITY'] == 0.05
        assert overrides['ESC_ENABLED'] is False
        assert overrides['SELECTIVITY_FRACTIONS'] == [0.1, 1.0]
        assert 'get_overrides' not in overrides

    def test_flatten_keeps_constants_only(self):
        config = render_utils.flatten_app_config()

        assert config['PROJECT_SLUG'] == 'exact-selectivity'
        assert 'configure_targets' not in config


class RenderTestCase(unittest.TestCase):
    def test_filters(self):
        assert render_utils.format_ms_filter(None) == '-'
        assert render_utils.format_ms_filter(1.23456) == '1.235'
        assert render_utils.format_sel_filter(Fraction(1, 8)) == '0.125000'
        assert render_utils.bool_filter(0) == 'false'
        assert render_utils.format_ratio_filter(None) == '-'
        assert render_utils.format_ratio_filter(2.5) == '2.50x'

    def test_json_encoder(self):
        payload = json.loads(render_utils.dumps({
            'count': np.int64(3),
            'price': Decimal('1.50'),
            'sel': Fraction(1, 4),
            'keys': np.array([1, 2]),
        }))

        assert payload == {'count': 3, 'price': '1.50', 'sel': 0.25, 'keys': [1, 2]}


if __name__ == '__main__':
    unittest.main()
