#include "dlmp/acceptance.hpp"

#include <iostream>

int main()
{
    dlmp::acceptance::Config cfg;
    cfg.fixtures_dir = DLMP_SOURCE_DIR "/fixtures";
    cfg.reference_solver = "python3 " DLMP_SOURCE_DIR "/tools/reference_backend.py";
    return dlmp::acceptance::run_all(cfg, std::cout);
}
