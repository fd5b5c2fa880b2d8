#include "cli.hpp"

int main(int argc, char** argv)
{
	return ptfesh::cli::run(argc, argv);
}
