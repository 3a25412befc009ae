// SPDX-License-Identifier: MIT OR Apache-2.0

#![forbid(unsafe_code)]

fn main() {
    std::process::exit(blockseg_cli::run(std::env::args_os()));
}
