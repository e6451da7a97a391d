"""Small shared architecture configs for CLI and engine tests."""


def toy_config_for_size(size: int) -> dict:
    return {
        "name": f"toy{size}",
        "input_size": size,
        "input_channels": 3,
        "taps": ["conv0", "pool1"],
        "layers": [
            {
                "name": "conv0",
                "op": "conv",
                "params": {"kernel": 3, "stride": 1, "padding": 1, "out_channels": 4},
            },
            {"name": "relu0", "op": "relu"},
            {"name": "pool1", "op": "maxpool", "params": {"kernel": 2, "stride": 2}},
        ],
    }
