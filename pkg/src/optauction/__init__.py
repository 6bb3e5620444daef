"""Optimal procurement auctions for single-minded and XOR-minded sellers."""
