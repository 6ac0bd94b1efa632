#!/usr/bin/env python

import dataclasses
import datetime
import json

from decimal import Decimal
from fractions import Fraction

import numpy as np
from jinja2 import Environment, FileSystemLoader, StrictUndefined

import app_config

class BetterJSONEncoder(json.JSONEncoder):
    """
    A JSON encoder that intelligently handles dates, decimals, fractions,
    numpy scalars and dataclasses.
    """
    def default(self, obj):
        if isinstance(obj, (datetime.datetime, datetime.date)):
            encoded_object = obj.isoformat()
        elif isinstance(obj, Decimal):
            encoded_object = str(obj)
        elif isinstance(obj, Fraction):
            encoded_object = float(obj)
        elif isinstance(obj, np.integer):
            encoded_object = int(obj)
        elif isinstance(obj, np.floating):
            encoded_object = float(obj)
        elif isinstance(obj, np.ndarray):
            encoded_object = obj.tolist()
        elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            encoded_object = dataclasses.asdict(obj)
        else:
            encoded_object = json.JSONEncoder.default(self, obj)

        return encoded_object

def dumps(payload, **kwargs):
    kwargs.setdefault('indent', 2)
    kwargs.setdefault('sort_keys', True)

    return json.dumps(payload, cls=BetterJSONEncoder, **kwargs)

def flatten_app_config():
    """
    Returns a copy of app_config containing only
    configuration variables.
    """
    config = {}

    # Only all-caps [constant] vars get included
    for k, v in app_config.__dict__.items():
        if k.upper() == k:
            config[k] = v

    return config

def format_ms_filter(ms):
    """
    Milliseconds with three decimals, or '-' when timings are hidden.
    """
    if ms is None:
        return '-'

    return '%.3f' % ms

def format_sel_filter(sel):
    return '%.6f' % float(sel)

def bool_filter(value):
    return 'true' if value else 'false'

def format_ratio_filter(ratio):
    if ratio is None:
        return '-'

    return '%.2fx' % ratio

_environment = None

def make_environment():
    """
    Jinja environment over the templates directory.
    """
    global _environment

    if _environment is None:
        env = Environment(
            loader=FileSystemLoader(app_config.TEMPLATES_PATH),
            undefined=StrictUndefined,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
            autoescape=False,
        )

        env.filters['ms'] = format_ms_filter
        env.filters['sel'] = format_sel_filter
        env.filters['bool'] = bool_filter
        env.filters['ratio'] = format_ratio_filter
        _environment = env

    return _environment

def make_context(**kwargs):
    """
    Create a base context for rendering: app_config plus the caller's
    values.
    """
    context = flatten_app_config()
    context.update(kwargs)

    return context

def render_template(name, **kwargs):
    return make_environment().get_template(name).render(**make_context(**kwargs))
