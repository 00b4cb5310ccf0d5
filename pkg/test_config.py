#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
test_config.py - Unit tests for config.py

Tests settings loading: built-in defaults, the shipped config.json,
LTID_* environment overrides and rejection of bad values.
"""

import json
import os
import tempfile
import unittest

from pydantic import ValidationError

from config import DEFAULT_CONFIG_PATH, ToolkitSettings, load_settings


class TestLoadSettings(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmpdir.cleanup()

    def _write(self, data, name="config.json"):
        path = os.path.join(self.tmpdir.name, name)
        with open(path, "w", encoding="utf-8") as fh:
            if isinstance(data, str):
                fh.write(data)
            else:
                json.dump(data, fh)
        return path

    def test_missing_file_gives_defaults(self):
        settings = load_settings(os.path.join(self.tmpdir.name, "absent.json"), environ={})
        self.assertEqual(settings, ToolkitSettings())
        self.assertEqual(settings.strategy, "random")
        self.assertEqual(settings.bound_precision, 256)
        self.assertIsNone(settings.archive_url)

    def test_shipped_config_matches_defaults(self):
        self.assertEqual(load_settings(DEFAULT_CONFIG_PATH, environ={}), ToolkitSettings())

    def test_file_values(self):
        path = self._write({"trials": 50, "strategy": "max_active_degree", "anneal": {"max_steps": 10}})
        settings = load_settings(path, environ={})
        self.assertEqual(settings.trials, 50)
        self.assertEqual(settings.strategy, "max-active-degree")
        self.assertEqual(settings.anneal.max_steps, 10)
        self.assertEqual(settings.anneal.cooling_factor, 0.95)

    def test_environment_overrides_file(self):
        path = self._write({"trials": 50, "workers": 2})
        environ = {"LTID_TRIALS": "7", "LTID_LOG_LEVEL": "debug", "LTID_ARCHIVE_URL": "none",
                   "LTID_FIRST_RIPPLE_RULE": "empty-ripple"}
        settings = load_settings(path, environ=environ)
        self.assertEqual(settings.trials, 7)
        self.assertEqual(settings.workers, 2)
        self.assertEqual(settings.log_level, "DEBUG")
        self.assertIsNone(settings.archive_url)
        self.assertEqual(settings.first_ripple_rule, "empty-ripple")

    def test_rejects_bad_values(self):
        for environ in [{"LTID_STRATEGY": "greedy"}, {"LTID_WORKERS": "0"},
                        {"LTID_LOG_LEVEL": "loud"}, {"LTID_BOUND_EXPONENT_MODE": "complex"}]:
            with self.assertRaises(ValidationError):
                load_settings(os.path.join(self.tmpdir.name, "absent.json"), environ=environ)

    def test_invalid_json(self):
        path = self._write("{not json")
        with self.assertRaises(ValueError):
            load_settings(path, environ={})


if __name__ == "__main__":
    unittest.main()
