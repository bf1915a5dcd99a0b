#include "lazygp/cli.hpp"

int main(int argc, char** argv) {
    return lazygp::run_cli(argc, argv);
}
