#include "geosup/cli.hpp"

int main(int argc, char** argv) {
    return geosup::cli_dispatch(argc, argv);
}
