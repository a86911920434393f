"""Helper scripts: demo bundle export."""
