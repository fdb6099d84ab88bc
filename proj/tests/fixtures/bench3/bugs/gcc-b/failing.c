int x = 7;
int main() {
  int y = (x * 6) % 43;
  return y == 42 ? 0 : 1;
}
