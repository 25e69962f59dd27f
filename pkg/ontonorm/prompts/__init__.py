"""Prompt templates (pinned resources)"""
