MODULE_NAME = 'mixbound'

# import {MODULE_NAME}.cli
# main = {MODULE_NAME}.cli.main
main = __import__(f'{MODULE_NAME}.cli').cli.main

if __name__ == '__main__':
    raise SystemExit(main())
