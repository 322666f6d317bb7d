"""Tests for Auto-Transcript-Agent."""
