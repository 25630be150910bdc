#include <iostream>

int main() {
  std::cerr << "acceptance suite not implemented yet\n";
  return 1;
}
