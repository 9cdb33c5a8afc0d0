#include "bateman/app.hpp"

int main(int argc, char** argv) { return bateman::app::main(argc, argv); }
