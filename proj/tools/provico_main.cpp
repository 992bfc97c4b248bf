#include "provico/cli.hpp"

int main(int argc, char** argv) { return provico::cli_main(argc, argv); }
